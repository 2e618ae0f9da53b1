// Rolling per-direction success table, derived purely from the state stream:
// a trial has ended when trial.completed increments, and it was a hit when
// trial.hits incremented with it.

import { StateMessage } from "./protocol";

export type DirectionRow = { direction: string; trials: number; hits: number };

export class RollingStats {
  private rows = new Map<string, { trials: number; hits: number }>();
  private lastCompleted = 0;
  private lastHits = 0;
  private currentDirection: string | null = null;
  private phase: string | null = null;

  update(state: StateMessage): void {
    if (state.phase !== this.phase) {
      // trial counters are per test phase on the wire
      this.phase = state.phase;
      this.lastCompleted = 0;
      this.lastHits = 0;
      this.currentDirection = null;
    }
    if (state.target !== null) {
      this.currentDirection = state.target.direction;
    }
    const trial = state.trial;
    if (!trial || trial.completed === undefined || trial.hits === undefined) return;
    if (trial.completed > this.lastCompleted && this.currentDirection !== null) {
      const row = this.rows.get(this.currentDirection) ?? { trials: 0, hits: 0 };
      row.trials += trial.completed - this.lastCompleted;
      if (trial.hits > this.lastHits) row.hits += trial.hits - this.lastHits;
      this.rows.set(this.currentDirection, row);
    }
    this.lastCompleted = trial.completed;
    this.lastHits = trial.hits;
  }

  table(): DirectionRow[] {
    const order = ["RT", "LT", "TT", "BT"];
    return order
      .filter((d) => this.rows.has(d))
      .map((d) => ({ direction: d, ...this.rows.get(d)! }));
  }

  overall(): { trials: number; hits: number } {
    let trials = 0;
    let hits = 0;
    for (const row of this.rows.values()) {
      trials += row.trials;
      hits += row.hits;
    }
    return { trials, hits };
  }
}
