/** Live round trip against the real session server.
 *
 * Spawns `python3 -m vrguide serve` on an ephemeral port, speaks the
 * newline-delimited frame protocol over raw TCP, and checks the contract
 * the page relies on: five object markers from hello+snapshot, a
 * processing frame strictly before the guide_response frame, and a grab
 * issued during awaiting_grab landing in escorting on the next snapshot.
 */

import { type ChildProcess, spawn } from "node:child_process";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  encodeCommand,
  parseServerFrame,
  type ClientCommand,
  type GuideResponseEvent,
  type ServerFrame,
  type SnapshotFrame,
} from "../src/protocol.js";
import {
  apply,
  initialState,
  isPending,
  markers,
  type ClientState,
} from "../src/state.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = path.resolve(HERE, "..", "..");
const SCENE = path.join(REPO_ROOT, "scenes", "town.json");
const TIMEOUT_MS = 20_000;

class FrameStream {
  frames: ServerFrame[] = [];
  private waiters: (() => void)[] = [];
  private closedReason: string | null = null;

  push(frame: ServerFrame): void {
    this.frames.push(frame);
    this.wake();
  }

  close(reason: string): void {
    this.closedReason = reason;
    this.wake();
  }

  private wake(): void {
    const waiters = this.waiters;
    this.waiters = [];
    for (const waiter of waiters) {
      waiter();
    }
  }

  /** Resolve with the first frame at/after fromIndex matching pred. */
  async find(
    pred: (frame: ServerFrame) => boolean,
    fromIndex: number,
    what: string,
  ): Promise<{ frame: ServerFrame; index: number }> {
    const deadline = Date.now() + TIMEOUT_MS;
    let index = fromIndex;
    for (;;) {
      for (; index < this.frames.length; index += 1) {
        if (pred(this.frames[index])) {
          return { frame: this.frames[index], index };
        }
      }
      if (this.closedReason !== null) {
        throw new Error(`stream closed (${this.closedReason}) before ${what}`);
      }
      if (Date.now() > deadline) {
        throw new Error(`timed out waiting for ${what}`);
      }
      await new Promise<void>((resolve) => {
        this.waiters.push(resolve);
        setTimeout(resolve, 250);
      });
    }
  }
}

let server: ChildProcess;
let serverOutput = "";
let socket: net.Socket;
const stream = new FrameStream();
const exited = () =>
  new Promise<number | null>((resolve) => server.on("close", resolve));

function send(command: ClientCommand): void {
  socket.write(encodeCommand(command));
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-u", "-m", "vrguide", "serve", "--scene", SCENE, "--port", "0",
     "--speedup", "25"],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  const port = await new Promise<number>((resolve, reject) => {
    const onData = (chunk: Buffer) => {
      serverOutput += chunk.toString("utf-8");
      const match = serverOutput.match(/listening on 127\.0\.0\.1:(\d+)/);
      if (match) {
        resolve(Number(match[1]));
      }
    };
    server.stdout!.on("data", onData);
    server.stderr!.on("data", (chunk: Buffer) => {
      serverOutput += chunk.toString("utf-8");
    });
    server.on("close", () =>
      reject(new Error(`server exited early:\n${serverOutput}`)));
    setTimeout(() =>
      reject(new Error(`no listen line:\n${serverOutput}`)), TIMEOUT_MS);
  });

  socket = net.createConnection(port, "127.0.0.1");
  let buffer = "";
  socket.on("data", (chunk) => {
    buffer += chunk.toString("utf-8");
    let newline;
    while ((newline = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, newline);
      buffer = buffer.slice(newline + 1);
      if (line.trim() !== "") {
        stream.push(parseServerFrame(line));
      }
    }
  });
  socket.on("close", () => stream.close("socket closed"));
  socket.on("error", () => stream.close("socket error"));
  await new Promise<void>((resolve) => socket.on("connect", resolve));
}, TIMEOUT_MS);

afterAll(() => {
  socket?.destroy();
  if (server && server.exitCode === null) {
    server.kill("SIGKILL");
  }
});

describe("live session round trip", () => {
  let state: ClientState = initialState();
  let cursor = 0;

  const applyThrough = (index: number) => {
    for (; cursor <= index; cursor += 1) {
      state = apply(state, { type: "frame", frame: stream.frames[cursor] });
    }
  };

  it("hello + first snapshot yield all five object markers", async () => {
    const hello = await stream.find(
      (f) => f.type === "hello", 0, "hello frame");
    expect(hello.index).toBe(0); // hello precedes everything else
    const snap = await stream.find(
      (f) => f.type === "snapshot", 0, "first snapshot");
    applyThrough(snap.index);
    expect(state.scene?.objects).toHaveLength(5);
    expect(markers(state)).toHaveLength(5);
    expect(state.scene?.grid).toMatchObject({ width: 20, height: 20 });
  }, TIMEOUT_MS);

  it("answers a navigation query, processing frame first", async () => {
    const sentAt = stream.frames.length;
    send({ kind: "query", text: "Take me to the Red Car." });
    state = apply(state, { type: "query_sent" });
    expect(isPending(state)).toBe(true);

    const processing = await stream.find(
      (f) => f.type === "event" && f.event.kind === "processing",
      sentAt, "processing event");
    const response = await stream.find(
      (f) => f.type === "event" && f.event.kind === "guide_response",
      sentAt, "guide response");
    expect(processing.index).toBeLessThan(response.index);

    const payload = (response.frame as
      { type: "event"; event: GuideResponseEvent }).event;
    expect(payload.text).toContain(
      "Grab onto me and I will take you to Red Car.");
    expect(payload.intent).toMatchObject(
      { kind: "go_to", object_id: "red_car", mode: "walk" });

    applyThrough(response.index);
    expect(isPending(state)).toBe(false);
  }, TIMEOUT_MS);

  it("moves to escorting within one snapshot of the grab", async () => {
    const awaiting = await stream.find(
      (f) => f.type === "snapshot" && f.guide.state === "awaiting_grab",
      0, "awaiting_grab snapshot");
    expect((awaiting.frame as SnapshotFrame).guide.target).toBe("red_car");

    const sentAt = stream.frames.length;
    send({ kind: "grab" });
    const changed = await stream.find(
      (f) => f.type === "snapshot" && f.guide.state !== "awaiting_grab",
      sentAt, "post-grab state change");
    // the very first state change after the grab is the escort
    expect((changed.frame as SnapshotFrame).guide.state).toBe("escorting");
    applyThrough(changed.index);
  }, TIMEOUT_MS);

  it("says goodbye on quit and exits cleanly", async () => {
    const sentAt = stream.frames.length;
    send({ kind: "quit" });
    const bye = await stream.find(
      (f) => f.type === "bye", sentAt, "bye frame");
    expect(bye.frame).toMatchObject({ type: "bye", reason: "quit" });
    expect(await exited()).toBe(0);
  }, TIMEOUT_MS);
});
