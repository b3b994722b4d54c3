/** Formatting for the event feed: one icon + label row per entry.
 *
 * Optional audio cues are tone frequencies only — playback is wired up
 * (and defaulted off) by the page, never here.
 */

import type {
  ActionEvent,
  ErrorInfo,
  GuideResponseEvent,
  PersonaChangedEvent,
  ServerEvent,
} from "./protocol.js";
import type { FeedEntry } from "./state.js";

const ICONS: Record<string, string> = {
  user_footstep: "👣",
  guide_footstep: "🐾",
  turn: "↪️",
  teleport: "✨",
  beacon_ping: "📍",
  processing: "⏳",
  response_ready: "🔔",
  arrival: "🏁",
  haptic_grab: "🤝",
  guide_response: "💬",
  persona_changed: "🎭",
  action: "⚙️",
  error: "⚠️",
};

export function iconFor(kind: string): string {
  return ICONS[kind] ?? "•";
}

/** Tone frequency (Hz) for an event kind, for opt-in audio cues. */
export function toneFor(kind: string): number | null {
  switch (kind) {
    case "beacon_ping":
      return 880;
    case "arrival":
      return 660;
    case "guide_footstep":
      return 220;
    case "user_footstep":
      return 180;
    case "response_ready":
      return 520;
    default:
      return null;
  }
}

function describe(kind: string, data: ServerEvent | ErrorInfo): string {
  switch (kind) {
    case "guide_response": {
      const event = data as GuideResponseEvent;
      return event.text.split("\n")[0];
    }
    case "persona_changed": {
      const event = data as PersonaChangedEvent;
      return `persona: ${event.previous} → ${event.persona}`;
    }
    case "action": {
      const event = data as ActionEvent;
      const target = event.intent.object_id ?? "?";
      const suffix = event.error === null ? "" : ` (${event.error})`;
      return `${event.intent.kind} ${target}: ${event.status}${suffix}`;
    }
    case "error": {
      const error = data as ErrorInfo;
      return `${error.code}: ${error.message}`;
    }
    default:
      return kind.replace(/_/g, " ");
  }
}

export interface FeedRow {
  icon: string;
  time: string;
  label: string;
  kind: string;
}

export function formatEntry(entry: FeedEntry): FeedRow {
  return {
    icon: iconFor(entry.kind),
    time: entry.t < 0 ? "—" : entry.t.toFixed(2),
    label: describe(entry.kind, entry.data),
    kind: entry.kind,
  };
}
