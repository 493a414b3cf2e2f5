/**
 * Browser entry point: wires the canvas, keyboard, pointer, and a real
 * WebSocket into the client, and runs the render loop. The optional
 * contact click gives an audible cue when the force sensor first reads
 * nonzero, standing in for the haptic feel of a physical interface.
 */

import { CanvasSurface } from "./canvas.js";
import { TeleopClient } from "./client.js";
import type { SocketLike } from "./client.js";
import { RenderLoop } from "./loop.js";
import { render } from "./renderer.js";

/** Adapt a browser WebSocket to the client's socket interface. */
function wrapSocket(ws: WebSocket): SocketLike {
  const wrapped: SocketLike = {
    get readyState() {
      return ws.readyState;
    },
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
  };
  ws.onopen = () => wrapped.onopen?.();
  ws.onmessage = (ev) => wrapped.onmessage?.({ data: String(ev.data) });
  ws.onclose = () => wrapped.onclose?.();
  return wrapped;
}

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("2d canvas context unavailable");
const surface = new CanvasSurface(ctx);

const url = new URL(window.location.href);
const wsUrl =
  url.searchParams.get("ws") ??
  `ws://${url.hostname}:${url.searchParams.get("port") ?? "8765"}/ws`;

const client = new TeleopClient(() => wrapSocket(new WebSocket(wsUrl)));

const MOVEMENT = new Set([
  "ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown",
  "KeyA", "KeyD", "KeyW", "KeyS", "Space", "KeyR", "Enter",
]);

window.addEventListener("keydown", (ev) => {
  if (!MOVEMENT.has(ev.code)) return;
  ev.preventDefault();
  client.keydown(ev.code);
});
window.addEventListener("keyup", (ev) => {
  if (MOVEMENT.has(ev.code)) client.keyup(ev.code);
});

let dragOrigin: [number, number] | null = null;
canvas.addEventListener("pointerdown", (ev) => {
  dragOrigin = [ev.clientX, ev.clientY];
  canvas.setPointerCapture(ev.pointerId);
});
canvas.addEventListener("pointermove", (ev) => {
  if (!dragOrigin) return;
  client.pointerDrag(ev.clientX - dragOrigin[0], ev.clientY - dragOrigin[1]);
});
canvas.addEventListener("pointerup", () => {
  dragOrigin = null;
  client.pointerRelease();
});

// audible contact cue: short click when force goes from zero to nonzero
let hadContact = false;
let audio: AudioContext | null = null;
client.onChange = (view) => {
  const f = view.state?.contact_force;
  const contact = !!f && Math.hypot(f[0], f[1]) > 1e-9;
  if (contact && !hadContact && typeof AudioContext !== "undefined") {
    audio = audio ?? new AudioContext();
    const osc = audio.createOscillator();
    const gain = audio.createGain();
    gain.gain.setValueAtTime(0.08, audio.currentTime);
    gain.gain.exponentialRampToValueAtTime(1e-4, audio.currentTime + 0.05);
    osc.frequency.value = 880;
    osc.connect(gain).connect(audio.destination);
    osc.start();
    osc.stop(audio.currentTime + 0.06);
  }
  hadContact = contact;
};

const loop = new RenderLoop(
  (cb) => requestAnimationFrame(cb),
  () => render(client.view, surface),
  () => performance.now(),
);

client.connect();
loop.start();
