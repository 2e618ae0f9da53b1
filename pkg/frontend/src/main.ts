// Console entry point: wire the socket, input capture, and render loop.

import { paint } from "./canvas";
import { SessionConnection } from "./connection";
import { IntentSender, KeyIntent, PointerIntent, SAMPLE_HZ } from "./intent";
import { encodeControl, encodeIntent, ServerMessage, StateMessage } from "./protocol";
import { renderScene, UiSessionView, HEIGHT, WIDTH } from "./scene";
import { RollingStats } from "./stats";

const POINTER_GAIN = 1.2; // intent units per px/ms of pointer speed
const KEY_EFFORT = 0.4;

const canvas = document.getElementById("console") as HTMLCanvasElement;
canvas.width = WIDTH;
canvas.height = HEIGHT;
const ctx = canvas.getContext("2d")!;

const stats = new RollingStats();
let lastState: StateMessage | null = null;
let notice: string | null = null;
let inputMode: "pointer" | "keys" = "pointer";

const url = `ws://${location.host}/ws`;
const connection = new SessionConnection(url, (msg: ServerMessage) => {
  if (msg.type === "state") {
    lastState = msg;
    stats.update(msg);
  } else if (msg.type === "summary") {
    const overall = (msg.summary as any)?.combined?.overall;
    notice = overall
      ? `session done: ${overall.n_hits}/${overall.n_trials} hits`
      : "session done";
  } else if (msg.type === "error") {
    notice = msg.message;
  }
});

// --- input capture -----------------------------------------------------------

const pointer = new PointerIntent(POINTER_GAIN);
const keys = new KeyIntent(KEY_EFFORT);
const sender = new IntentSender();

canvas.addEventListener("pointermove", (ev) => {
  if (inputMode === "pointer") pointer.move(ev.movementX, ev.movementY, performance.now());
});
window.addEventListener("keydown", (ev) => {
  if (ev.key.startsWith("Arrow")) {
    inputMode = "keys";
    keys.keyDown(ev.key);
    ev.preventDefault();
  }
});
window.addEventListener("keyup", (ev) => keys.keyUp(ev.key));
canvas.addEventListener("pointerdown", () => {
  inputMode = "pointer";
  canvas.requestPointerLock?.();
});

setInterval(() => {
  const intent = inputMode === "pointer" ? pointer.sample(performance.now()) : keys.sample();
  const outgoing = sender.next(intent);
  if (outgoing !== null) connection.send(encodeIntent(outgoing.u, outgoing.v));
}, 1000 / SAMPLE_HZ);

// --- controls ------------------------------------------------------------------

for (const action of ["start", "abort", "next_mode"] as const) {
  document.getElementById(`btn-${action}`)?.addEventListener("click", () => {
    connection.send(encodeControl(action));
  });
}

// --- render loop -----------------------------------------------------------------

function frame() {
  const view: UiSessionView = {
    connection: connection.state,
    stale: connection.stale(),
    state: lastState,
    stats: stats.table(),
    inputMode,
    notice,
  };
  paint(ctx, renderScene(view));
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
