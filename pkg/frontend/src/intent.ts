// Operator input -> surrogate intent stream.
//
// Pointer mode: intent velocity is an exponentially smoothed pointer velocity
// times a calibration gain, clamped to [-1, 1] per axis. Keys mode: arrow
// keys push a fixed effort on their axis. A zero intent is sent once on the
// transition to rest and then goes quiet; the service's staleness rule takes
// over from there.

export const SAMPLE_HZ = 30; // minimum send rate while intent is nonzero

// pointer velocity smoothing time constant
const SMOOTHING_MS = 80;
// pointer deltas older than this contribute nothing (pauses decay to rest)
const POINTER_IDLE_MS = 120;

export type Intent = { u: number; v: number };

function clamp(x: number): number {
  return Math.min(1, Math.max(-1, x));
}

export class PointerIntent {
  private vu = 0;
  private vv = 0;
  private lastMoveMs: number | null = null;

  /** gain: intent units per (CSS pixel / ms) of pointer speed. */
  constructor(private gain: number) {}

  /** Feed one pointer movement; dy is screen-down positive and is inverted. */
  move(dxPx: number, dyPx: number, nowMs: number): void {
    if (this.lastMoveMs === null) {
      this.lastMoveMs = nowMs;
      return;
    }
    const dt = Math.max(nowMs - this.lastMoveMs, 1);
    this.lastMoveMs = nowMs;
    const alpha = 1 - Math.exp(-dt / SMOOTHING_MS);
    this.vu += alpha * ((dxPx / dt) * this.gain - this.vu);
    this.vv += alpha * ((-dyPx / dt) * this.gain - this.vv);
  }

  sample(nowMs: number): Intent {
    if (this.lastMoveMs !== null && nowMs - this.lastMoveMs > POINTER_IDLE_MS) {
      // no movement events while the pointer is still: decay toward rest
      const dt = nowMs - this.lastMoveMs - POINTER_IDLE_MS;
      const decay = Math.exp(-dt / SMOOTHING_MS);
      return { u: clamp(this.vu * decay), v: clamp(this.vv * decay) };
    }
    return { u: clamp(this.vu), v: clamp(this.vv) };
  }
}

export class KeyIntent {
  private held = new Set<string>();

  constructor(private effort: number) {}

  keyDown(key: string): void {
    this.held.add(key);
  }

  keyUp(key: string): void {
    this.held.delete(key);
  }

  sample(): Intent {
    let u = 0;
    let v = 0;
    if (this.held.has("ArrowRight")) u += this.effort;
    if (this.held.has("ArrowLeft")) u -= this.effort;
    if (this.held.has("ArrowUp")) v += this.effort;
    if (this.held.has("ArrowDown")) v -= this.effort;
    return { u: clamp(u), v: clamp(v) };
  }
}

/**
 * Decides which samples actually go on the wire: every sample while moving,
 * exactly one zero on the transition to rest.
 */
export class IntentSender {
  private wasZero = true;

  next(intent: Intent): Intent | null {
    const zero = Math.abs(intent.u) < 1e-3 && Math.abs(intent.v) < 1e-3;
    if (zero && this.wasZero) return null;
    this.wasZero = zero;
    return zero ? { u: 0, v: 0 } : intent;
  }
}
