// Full console scene as a pure function of the view state: the task field
// with cursor and target, a phase banner and trial clock, the robot avatar,
// and the running stats panel. Reloading mid-session and re-receiving the
// same state reproduces the identical draw list.

import { drawAvatar } from "./avatar";
import { DrawCmd } from "./draw";
import { StateMessage } from "./protocol";
import { DirectionRow } from "./stats";

export const WIDTH = 960;
export const HEIGHT = 640;
const FIELD = 640; // square task area on the left, side panel on the right

const BACKGROUND = "#edf2f4";
const FIELD_BG = "#ffffff";
const INK = "#2b2d42";
const CURSOR = "#d90429";
const TARGET = "#2f6690";
const TARGET_HL = "#e09f3e";

export type ConnectionState = "connecting" | "open" | "closed";

export type UiSessionView = {
  connection: ConnectionState;
  stale: boolean; // no state message for > 1 s while connected
  state: StateMessage | null;
  stats: DirectionRow[];
  inputMode: "pointer" | "keys";
  notice: string | null; // last error or summary line
};

function fx(x: number): number {
  return (x + 1) * (FIELD / 2);
}

function fy(y: number): number {
  return (1 - y) * (FIELD / 2); // screen y grows down, task y grows up
}

export function renderScene(view: UiSessionView): DrawCmd[] {
  const cmds: DrawCmd[] = [{ kind: "clear", color: BACKGROUND }];
  cmds.push({ kind: "rect", x: 0, y: 0, w: FIELD, h: FIELD, fill: FIELD_BG, stroke: INK });

  const state = view.state;
  if (state === null) {
    cmds.push({
      kind: "text",
      x: FIELD / 2,
      y: FIELD / 2,
      text: view.connection === "open" ? "waiting for session" : "connecting...",
      fill: INK,
      size: 24,
      align: "center",
    });
  } else {
    // center marker
    cmds.push({ kind: "line", x1: fx(0) - 8, y1: fy(0), x2: fx(0) + 8, y2: fy(0), stroke: "#ccc", width: 1 });
    cmds.push({ kind: "line", x1: fx(0), y1: fy(0) - 8, x2: fx(0), y2: fy(0) + 8, stroke: "#ccc", width: 1 });

    if (state.target !== null) {
      const t = state.target;
      const r = (t.radius * FIELD) / 2;
      cmds.push({
        kind: "circle",
        x: fx(t.center[0]),
        y: fy(t.center[1]),
        r,
        stroke: TARGET_HL,
        width: 5,
      });
      cmds.push({
        kind: "text",
        x: fx(t.center[0]),
        y: fy(t.center[1]) - r - 8,
        text: t.direction,
        fill: TARGET,
        size: 16,
        align: "center",
      });
    }

    cmds.push({
      kind: "circle",
      x: fx(state.cursor[0]),
      y: fy(state.cursor[1]),
      r: 9,
      fill: CURSOR,
    });

    // phase banner and trial clock
    cmds.push({
      kind: "text",
      x: 12,
      y: 24,
      text: state.phase,
      fill: INK,
      size: 18,
      align: "left",
    });
    if (state.trial !== null) {
      const clock = state.trial.elapsed_s.toFixed(1);
      const progress =
        state.trial.total !== undefined
          ? `  trial ${state.trial.index}/${state.trial.total}`
          : `  trial ${state.trial.index}`;
      cmds.push({
        kind: "text",
        x: 12,
        y: 48,
        text: `${clock}s${progress}`,
        fill: INK,
        size: 15,
        align: "left",
      });
    }
    cmds.push(...drawAvatar(state.robot.gesture, state.robot.eye_rgb, avatarBox()));
  }

  cmds.push(...statsPanel(view.stats));

  cmds.push({
    kind: "text",
    x: WIDTH - 12,
    y: HEIGHT - 12,
    text: `input: ${view.inputMode}`,
    fill: INK,
    size: 13,
    align: "right",
  });

  if (view.stale || view.connection !== "open") {
    const text =
      view.connection === "open" ? "signal stale - no state for 1 s" : "disconnected - reconnecting";
    cmds.push({ kind: "rect", x: 0, y: HEIGHT - 36, w: FIELD, h: 36, fill: "#d90429" });
    cmds.push({
      kind: "text",
      x: FIELD / 2,
      y: HEIGHT - 13,
      text,
      fill: "#ffffff",
      size: 16,
      align: "center",
    });
  }
  if (view.notice !== null) {
    cmds.push({
      kind: "text",
      x: FIELD + 16,
      y: HEIGHT - 40,
      text: view.notice,
      fill: INK,
      size: 13,
      align: "left",
    });
  }
  return cmds;
}

export function avatarBox() {
  return { x: FIELD + 40, y: 16, size: 240 };
}

function statsPanel(rows: DirectionRow[]): DrawCmd[] {
  const x0 = FIELD + 24;
  let y = 300;
  const cmds: DrawCmd[] = [
    { kind: "text", x: x0, y, text: "success", fill: INK, size: 16, align: "left" },
  ];
  y += 24;
  if (rows.length === 0) {
    cmds.push({ kind: "text", x: x0, y, text: "no trials yet", fill: "#888", size: 14, align: "left" });
    return cmds;
  }
  let trials = 0;
  let hits = 0;
  for (const row of rows) {
    const rate = row.trials > 0 ? ((100 * row.hits) / row.trials).toFixed(0) : "-";
    cmds.push({
      kind: "text",
      x: x0,
      y,
      text: `${row.direction}  ${row.hits}/${row.trials}  (${rate}%)`,
      fill: INK,
      size: 14,
      align: "left",
    });
    y += 20;
    trials += row.trials;
    hits += row.hits;
  }
  const rate = trials > 0 ? ((100 * hits) / trials).toFixed(1) : "-";
  cmds.push({
    kind: "text",
    x: x0,
    y: y + 4,
    text: `overall  ${hits}/${trials}  (${rate}%)`,
    fill: INK,
    size: 14,
    align: "left",
  });
  return cmds;
}
