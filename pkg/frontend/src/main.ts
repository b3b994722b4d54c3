/** Page entry point: connects to the WebSocket bridge, applies frames to
 * the reducer, and wires the canvas, chat box, persona picker, and feed.
 *
 * Audio cues are off by default; the checkbox opts in and tones are
 * spatialized with the gain/pan the server already computed.
 */

import { formatEntry, toneFor } from "./feed.js";
import { commandForKey, personaCommand, queryCommand } from "./input.js";
import {
  PERSONAS,
  encodeCommand,
  parseServerFrame,
  type ClientCommand,
  type ServerFrame,
} from "./protocol.js";
import {
  apply,
  escorting,
  initialState,
  isPending,
  type ClientState,
} from "./state.js";
import { render } from "./render.js";

const params = new URLSearchParams(window.location.search);
const bridgeUrl = params.get("bridge") ?? "ws://127.0.0.1:8765";

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const chatForm = document.getElementById("chat-form") as HTMLFormElement;
const chatInput = document.getElementById("chat-input") as HTMLInputElement;
const feedList = document.getElementById("feed") as HTMLUListElement;
const statusLine = document.getElementById("status") as HTMLElement;
const personaSelect = document.getElementById(
  "persona",
) as HTMLSelectElement;
const audioToggle = document.getElementById(
  "audio-toggle",
) as HTMLInputElement;
const overlay = document.getElementById("overlay") as HTMLElement;
const overlayText = document.getElementById("overlay-text") as HTMLElement;
const retryButton = document.getElementById("retry") as HTMLButtonElement;
const toast = document.getElementById("toast") as HTMLElement;

let toastTimer: number | undefined;

function showToast(text: string): void {
  toast.textContent = text;
  toast.classList.add("visible");
  window.clearTimeout(toastTimer);
  toastTimer = window.setTimeout(
    () => toast.classList.remove("visible"), 2500);
}

for (const persona of PERSONAS) {
  const option = document.createElement("option");
  option.value = persona.id;
  option.textContent = persona.label;
  personaSelect.append(option);
}

let state: ClientState = initialState();
let audioCtx: AudioContext | null = null;

const socket = new WebSocket(bridgeUrl);

function send(command: ClientCommand): boolean {
  if (socket.readyState !== WebSocket.OPEN) {
    showToast("not connected — input dropped");
    return false;
  }
  socket.send(encodeCommand(command));
  return true;
}

function playTone(kind: string, gain: number, pan: number): void {
  if (!audioToggle.checked || gain <= 0) {
    return;
  }
  const freq = toneFor(kind);
  if (freq === null) {
    return;
  }
  audioCtx = audioCtx ?? new AudioContext();
  const osc = audioCtx.createOscillator();
  const amp = audioCtx.createGain();
  const panner = new StereoPannerNode(audioCtx, { pan });
  osc.frequency.value = freq;
  amp.gain.value = 0.15 * gain;
  osc.connect(amp).connect(panner).connect(audioCtx.destination);
  osc.start();
  osc.stop(audioCtx.currentTime + 0.08);
}

function dispatch(action: Parameters<typeof apply>[1]): void {
  state = apply(state, action);
  syncDom();
}

function syncDom(): void {
  chatInput.disabled = isPending(state) || state.connection !== "connected";
  const snap = state.snapshot;
  const persona = snap?.guide.persona ?? "—";
  const guideState = snap?.guide.state ?? "—";
  const clock = snap === null ? "—" : snap.t.toFixed(2);
  const closed =
    state.byeReason === null ? "" : ` · ended (${state.byeReason})`;
  statusLine.textContent =
    `${state.connection} · t=${clock} · persona=${persona}` +
    ` · guide=${guideState}${closed}`;
  overlay.classList.toggle("visible", state.connection === "closed");
  overlayText.textContent = state.byeReason === null
    ? "disconnected"
    : `session ended (${state.byeReason})`;
  if (snap !== null && personaSelect.value !== snap.guide.persona &&
      document.activeElement !== personaSelect) {
    personaSelect.value = snap.guide.persona;
  }
  feedList.replaceChildren(
    ...state.feed.slice(-40).map((entry) => {
      const row = formatEntry(entry);
      const item = document.createElement("li");
      item.className = `feed-${row.kind}`;
      item.textContent = `${row.icon} ${row.time}  ${row.label}`;
      return item;
    }),
  );
  feedList.scrollTop = feedList.scrollHeight;
}

socket.addEventListener("open", () => dispatch({ type: "socket_open" }));
socket.addEventListener("close", () => dispatch({ type: "socket_closed" }));
socket.addEventListener("message", (msg) => {
  let frame: ServerFrame;
  try {
    frame = parseServerFrame(String(msg.data));
  } catch {
    return; // tolerate bridge noise; the server validates commands
  }
  if (frame.type === "event" && "gain" in frame.event) {
    playTone(frame.event.kind, frame.event.gain, frame.event.pan);
  }
  if (frame.type === "error") {
    showToast(`${frame.error.code}: ${frame.error.message}`);
  }
  dispatch({ type: "frame", frame });
});

retryButton.addEventListener("click", () => window.location.reload());

window.addEventListener("keydown", (event) => {
  if (document.activeElement === chatInput ||
      document.activeElement === personaSelect) {
    return;
  }
  const command = commandForKey(event.key, {
    grabbed: escorting(state),
    pending: isPending(state),
  });
  if (command !== null) {
    event.preventDefault();
    send(command);
  }
});

chatForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const command = queryCommand(chatInput.value, {
    grabbed: escorting(state),
    pending: isPending(state),
  });
  if (command !== null) {
    send(command);
    dispatch({ type: "query_sent" });
    chatInput.value = "";
  }
});

personaSelect.addEventListener("change", () => {
  send(personaCommand(personaSelect.value));
  personaSelect.blur();
});

function frameLoop(nowMs: number): void {
  render(ctx, state, nowMs);
  window.requestAnimationFrame(frameLoop);
}

syncDom();
window.requestAnimationFrame(frameLoop);
