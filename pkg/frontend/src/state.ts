/** Pure client state: a reducer over socket lifecycle + server frames.
 *
 * The client simulates nothing. It keeps the latest snapshot, the scene
 * from the hello frame, and a bounded feed of event/error rows. Queries
 * toggle a pending flag that gates the chat input: set when the user
 * submits, cleared by the matching guide_response or error frame, and
 * raised by any snapshot that reports the server still working.
 */

import type {
  ErrorInfo,
  SceneInfo,
  ServerEvent,
  ServerFrame,
  SnapshotFrame,
} from "./protocol.js";

export const FEED_LIMIT = 200;

export interface FeedEntry {
  t: number;
  kind: string;
  data: ServerEvent | ErrorInfo;
}

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface ClientState {
  connection: ConnectionStatus;
  scene: SceneInfo | null;
  snapshot: SnapshotFrame | null;
  feed: FeedEntry[];
  seen: Set<string>;
  pendingQuery: boolean;
  byeReason: string | null;
}

export type Action =
  | { type: "socket_open" }
  | { type: "socket_closed" }
  | { type: "query_sent" }
  | { type: "frame"; frame: ServerFrame };

export function initialState(): ClientState {
  return {
    connection: "connecting",
    scene: null,
    snapshot: null,
    feed: [],
    seen: new Set(),
    pendingQuery: false,
    byeReason: null,
  };
}

function dedupKey(t: number, kind: string): string {
  return `${t}:${kind}`;
}

function pushFeed(
  state: ClientState,
  t: number,
  kind: string,
  data: ServerEvent | ErrorInfo,
): ClientState {
  const key = dedupKey(t, kind);
  if (state.seen.has(key)) {
    return state; // replayed after a reconnect — already shown
  }
  const seen = new Set(state.seen);
  seen.add(key);
  const feed = [...state.feed, { t, kind, data }];
  while (feed.length > FEED_LIMIT) {
    const dropped = feed.shift()!;
    seen.delete(dedupKey(dropped.t, dropped.kind));
  }
  return { ...state, feed, seen };
}

export function apply(state: ClientState, action: Action): ClientState {
  switch (action.type) {
    case "socket_open":
      return { ...state, connection: "connected" };
    case "socket_closed":
      return { ...state, connection: "closed" };
    case "query_sent":
      return { ...state, pendingQuery: true };
    case "frame":
      return applyFrame(state, action.frame);
  }
}

function applyFrame(state: ClientState, frame: ServerFrame): ClientState {
  switch (frame.type) {
    case "hello":
      return { ...state, scene: frame.scene };
    case "snapshot": {
      const pendingQuery = state.pendingQuery || frame.query_pending;
      return { ...state, snapshot: frame, pendingQuery };
    }
    case "event": {
      const next = pushFeed(state, frame.event.t, frame.event.kind,
                            frame.event);
      if (frame.event.kind === "guide_response") {
        return { ...next, pendingQuery: false };
      }
      return next;
    }
    case "error": {
      const next = pushFeed(state, frame.t ?? -1, "error", frame.error);
      return { ...next, pendingQuery: false };
    }
    case "bye":
      return { ...state, byeReason: frame.reason, connection: "closed" };
  }
}

/** Chat is disabled exactly while this is true. */
export function isPending(state: ClientState): boolean {
  return state.pendingQuery;
}

export interface Marker {
  id: string;
  pos: [number, number, number];
  label: string;
  color: string;
  radius: number;
  beacon: boolean;
}

/** Scene objects at their live positions, joined with hello metadata. */
export function markers(state: ClientState): Marker[] {
  if (state.snapshot === null) {
    return [];
  }
  const meta = new Map(
    (state.scene?.objects ?? []).map((o) => [o.id, o]),
  );
  const lit = new Set(state.snapshot.beacons.map((b) => b.object_id));
  return state.snapshot.objects.map((o) => {
    const info = meta.get(o.id);
    return {
      id: o.id,
      pos: o.pos,
      label: info?.display_name ?? o.id,
      color: info?.color ?? "gray",
      radius: info?.radius ?? 0.5,
      beacon: lit.has(o.id),
    };
  });
}

/** True while the guide is parked waiting for the player to grab on. */
export function awaitingGrab(state: ClientState): boolean {
  return state.snapshot?.guide.state === "awaiting_grab";
}

/** True while the guide is walking the player to a target. */
export function escorting(state: ClientState): boolean {
  return state.snapshot?.guide.state === "escorting";
}
