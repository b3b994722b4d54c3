/** Frame types for the newline-delimited JSON session protocol.
 *
 * The server speaks five frame types (hello, snapshot, event, error, bye);
 * the client sends one command object per line. These mirror the wire
 * shapes exactly — the client never invents fields.
 */

export type Vec3 = [number, number, number];

export interface GridInfo {
  origin: Vec3;
  cell_size: number;
  width: number;
  height: number;
  blocked: [number, number][];
}

export interface SceneObject {
  id: string;
  display_name: string;
  description: string;
  color: string;
  shape: string;
  radius: number;
  position: Vec3;
  anchor: Vec3;
}

export interface SceneInfo {
  name: string;
  grid: GridInfo;
  spawn: { position: Vec3; yaw: number };
  objects: SceneObject[];
}

export type GuideStateKind = "following" | "awaiting_grab" | "escorting";

export interface HelloFrame {
  type: "hello";
  scene: SceneInfo;
}

export interface SnapshotFrame {
  type: "snapshot";
  t: number;
  user: { pos: Vec3; yaw: number };
  guide: {
    pos: Vec3;
    yaw: number;
    state: GuideStateKind;
    target: string | null;
    persona: string;
    visible: boolean;
  };
  beacons: { object_id: string; expires_at: number }[];
  objects: { id: string; pos: Vec3 }[];
  query_pending: boolean;
}

export type AudioKind =
  | "user_footstep"
  | "guide_footstep"
  | "turn"
  | "teleport"
  | "beacon_ping"
  | "processing"
  | "response_ready"
  | "arrival"
  | "haptic_grab";

export interface AudioEventPayload {
  kind: AudioKind;
  t: number;
  source: Vec3;
  detail: Record<string, unknown>;
  gain: number;
  pan: number;
}

export interface IntentInfo {
  kind: string;
  object_id: string | null;
  mode: string | null;
}

export interface GuideResponseEvent {
  kind: "guide_response";
  t: number;
  query: string;
  text: string;
  backend: string;
  latency: number;
  intent: IntentInfo | null;
}

export interface PersonaChangedEvent {
  kind: "persona_changed";
  t: number;
  persona: string;
  previous: string;
}

export interface ActionEvent {
  kind: "action";
  t: number;
  intent: IntentInfo;
  status: "accepted" | "rejected";
  error: string | null;
}

export type ServerEvent =
  | AudioEventPayload
  | GuideResponseEvent
  | PersonaChangedEvent
  | ActionEvent;

export interface EventFrame {
  type: "event";
  event: ServerEvent;
}

export interface ErrorInfo {
  code: string;
  message: string;
  [extra: string]: unknown;
}

export interface ErrorFrame {
  type: "error";
  t?: number;
  error: ErrorInfo;
}

export interface ByeFrame {
  type: "bye";
  reason: string;
}

export type ServerFrame =
  | HelloFrame
  | SnapshotFrame
  | EventFrame
  | ErrorFrame
  | ByeFrame;

const FRAME_TYPES = new Set(["hello", "snapshot", "event", "error", "bye"]);

/** Parse one line into a server frame. Throws on anything malformed. */
export function parseServerFrame(line: string): ServerFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new Error(`not JSON: ${line.slice(0, 80)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("frame is not an object");
  }
  const frame = raw as { type?: unknown };
  if (typeof frame.type !== "string" || !FRAME_TYPES.has(frame.type)) {
    throw new Error(`unknown frame type: ${String(frame.type)}`);
  }
  return raw as ServerFrame;
}

export type ClientCommand =
  | { kind: "move"; forward: number; strafe: number }
  | { kind: "turn_by"; radians: number }
  | { kind: "teleport_self"; position: Vec3 }
  | { kind: "query"; text: string }
  | { kind: "grab" }
  | { kind: "release" }
  | { kind: "switch_persona"; persona: string }
  | { kind: "quit" };

/** Encode a command as one protocol line (newline terminated).
 * Commands travel inside a {type: "cmd", cmd: {…}} envelope. */
export function encodeCommand(command: ClientCommand): string {
  return JSON.stringify({ type: "cmd", cmd: command }) + "\n";
}

/** The six built-in guide personas, in the order the engine lists them. */
export const PERSONAS: { id: string; label: string }[] = [
  { id: "human", label: "Human" },
  { id: "guide_dog", label: "Guide Dog" },
  { id: "white_cane", label: "White Cane" },
  { id: "robot", label: "Robot" },
  { id: "bird", label: "Bird" },
  { id: "invisible", label: "Invisible" },
];
