// JSON message contract of the session service WebSocket.
// The console renders only what arrives here; it never simulates the engine.

export type Gesture = "IDLE" | "RIGHT_HAND" | "LEFT_HAND" | "BOTH_HANDS" | "HEAD_SHAKE";

export type TargetInfo = {
  direction: "RT" | "LT" | "TT" | "BT";
  center: [number, number];
  radius: number;
};

export type TrialInfo = {
  index: number;
  elapsed_s: number;
  hits?: number;
  completed?: number;
  total?: number;
};

export type StateMessage = {
  type: "state";
  t_s: number;
  phase: string;
  cursor: [number, number];
  target: TargetInfo | null;
  decoded: [number, number];
  robot: { gesture: Gesture; eye_rgb: [number, number, number] };
  trial: TrialInfo | null;
};

export type HelloMessage = { type: "hello"; phase: string; modes: string[] };
export type SummaryMessage = { type: "summary"; summary: Record<string, unknown> };
export type ErrorMessage = { type: "error"; message: string };

export type ServerMessage = StateMessage | HelloMessage | SummaryMessage | ErrorMessage;

export type IntentMessage = { type: "intent"; u: number; v: number };
export type ControlMessage = { type: "control"; action: "start" | "abort" | "next_mode" };

const GESTURES = new Set(["IDLE", "RIGHT_HAND", "LEFT_HAND", "BOTH_HANDS", "HEAD_SHAKE"]);

function isPair(x: unknown): x is [number, number] {
  return Array.isArray(x) && x.length === 2 && x.every((n) => typeof n === "number");
}

/** Parse one raw frame; returns null for anything that is not a valid server message. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as Record<string, unknown>;
  switch (msg.type) {
    case "hello":
      return typeof msg.phase === "string"
        ? { type: "hello", phase: msg.phase, modes: (msg.modes as string[]) ?? [] }
        : null;
    case "summary":
      return { type: "summary", summary: (msg.summary as Record<string, unknown>) ?? {} };
    case "error":
      return typeof msg.message === "string" ? { type: "error", message: msg.message } : null;
    case "state": {
      if (
        typeof msg.t_s !== "number" ||
        typeof msg.phase !== "string" ||
        !isPair(msg.cursor) ||
        !isPair(msg.decoded)
      ) {
        return null;
      }
      const robot = msg.robot as { gesture?: unknown; eye_rgb?: unknown } | undefined;
      if (
        !robot ||
        typeof robot.gesture !== "string" ||
        !GESTURES.has(robot.gesture) ||
        !Array.isArray(robot.eye_rgb) ||
        robot.eye_rgb.length !== 3
      ) {
        return null;
      }
      let target: TargetInfo | null = null;
      if (msg.target !== null && msg.target !== undefined) {
        const t = msg.target as Record<string, unknown>;
        if (
          typeof t.direction !== "string" ||
          !["RT", "LT", "TT", "BT"].includes(t.direction) ||
          !isPair(t.center) ||
          typeof t.radius !== "number"
        ) {
          return null;
        }
        target = {
          direction: t.direction as TargetInfo["direction"],
          center: t.center as [number, number],
          radius: t.radius,
        };
      }
      return {
        type: "state",
        t_s: msg.t_s,
        phase: msg.phase,
        cursor: msg.cursor,
        target,
        decoded: msg.decoded,
        robot: {
          gesture: robot.gesture as Gesture,
          eye_rgb: robot.eye_rgb as [number, number, number],
        },
        trial: (msg.trial as TrialInfo | null) ?? null,
      };
    }
    default:
      return null;
  }
}

export function encodeIntent(u: number, v: number): string {
  return JSON.stringify({ type: "intent", u, v });
}

export function encodeControl(action: ControlMessage["action"]): string {
  return JSON.stringify({ type: "control", action });
}
