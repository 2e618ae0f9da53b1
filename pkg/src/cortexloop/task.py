"""Experiment protocol engine: phase sequencing, training reference
trajectories, cursor dynamics, target spawning, trial timing, and success
metrics.

Screen coordinates are normalized to [-1, 1] per axis with the center at
(0, 0). The engine is a deterministic state machine: same seeds and same
decoded-velocity stream produce the same trial results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ControlFault, EmptySummaryError
from .robot import activation_gate

MODES = ("horizontal1D", "vertical1D", "full2D")

MODE_DIRECTIONS = {
    "horizontal1D": ("RT", "LT"),
    "vertical1D": ("TT", "BT"),
    "full2D": ("RT", "LT", "TT", "BT"),
}

MODE_DEFAULT_TRIALS = {"horizontal1D": 10, "vertical1D": 10, "full2D": 12}

# phase identifiers used in events and state messages
PHASE_TRAINING_H = "training_horizontal"
PHASE_TRAINING_V = "training_vertical"
PHASE_CALIBRATION = "calibration"


def phase_for_mode(mode: str) -> str:
    if mode not in MODES:
        raise ConfigurationError(f"unknown test mode {mode!r}")
    return f"test_{mode}"


def legal_transition(current: str | None, nxt: str) -> bool:
    """Training(h) -> Training(v) -> Calibration -> Test(*); tests may repeat."""
    if current is None:
        return nxt == PHASE_TRAINING_H
    if current == PHASE_TRAINING_H:
        return nxt == PHASE_TRAINING_V
    if current == PHASE_TRAINING_V:
        return nxt == PHASE_CALIBRATION
    if current == PHASE_CALIBRATION:
        return nxt.startswith("test_")
    if current.startswith("test_"):
        return nxt.startswith("test_")
    return False


# Event log schema (JSON Lines, frozen). Every event carries t_s and type;
# payload keys by type:
#   phase_start   phase
#   trial_start   phase, trial, t (training phases: first sample index)
#   target_shown  phase, trial, direction, center, radius
#   hit           phase, trial, time_to_target_s
#   timeout       phase, trial
#   trial_end     phase, trial, outcome, wrong_direction_time_s,
#                 t (training phases: end sample index, exclusive)
#   fault         phase, trial, reason
# Unknown types are rejected on replay.
EVENT_TYPES = (
    "phase_start",
    "trial_start",
    "target_shown",
    "hit",
    "timeout",
    "trial_end",
    "fault",
)


@dataclass(frozen=True)
class CursorState:
    position: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Target:
    direction: str            # RT | LT | TT | BT
    center: tuple[float, float]
    radius: float
    shown_at: float           # seconds

    def __post_init__(self):
        if not 0 < self.radius < 0.5:
            raise ConfigurationError(f"target radius {self.radius} outside (0, 0.5)")


@dataclass(frozen=True)
class TrialResult:
    direction: str
    outcome: str              # hit | timeout
    time_to_target: float | None
    wrong_direction_time: float

    def __post_init__(self):
        if (self.outcome == "hit") != (self.time_to_target is not None):
            raise ConfigurationError("time_to_target present iff the trial was a hit")


@dataclass(frozen=True)
class DirectionStats:
    n_trials: int
    n_hits: int
    success_rate: float
    success_sd: float
    mean_time_to_target: float | None

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "n_hits": self.n_hits,
            "success_rate": self.success_rate,
            "success_sd": self.success_sd,
            "mean_time_to_target": self.mean_time_to_target,
        }


@dataclass(frozen=True)
class RunSummary:
    overall: DirectionStats
    by_direction: dict[str, DirectionStats]
    n_runs: int

    def to_dict(self) -> dict:
        return {
            "overall": self.overall.to_dict(),
            "by_direction": {d: s.to_dict() for d, s in self.by_direction.items()},
            "n_runs": self.n_runs,
        }


@dataclass(frozen=True)
class ProtocolParams:
    """Tunable protocol geometry and timing; defaults mirror the platform."""

    training_trials_per_axis: int = 5
    training_trial_s: float = 60.0
    test_trials: int | None = None     # None -> per-mode default
    run_size: int = 6                  # grouping for success-sd across runs
    timeout_s: float = 15.0
    intertrial_s: float = 2.0
    target_radius: float = 0.15
    target_offset: float = 0.85
    gain: float = 1.0
    update_hz: float = 16.0

    def trials_for(self, mode: str) -> int:
        return self.test_trials if self.test_trials is not None else MODE_DEFAULT_TRIALS[mode]


def training_reference(
    axis: str,
    duration_s: float,
    rng: np.random.Generator,
    update_hz: float = 16.0,
    velocity_rms: float = 0.3,
    smoothing_hz: float = 0.5,
    bound: float = 0.9,
) -> tuple[np.ndarray, np.ndarray]:
    """Experimenter-style random cursor drive for one training trial.

    Velocity is white noise through a one-pole low-pass at ``smoothing_hz``,
    normalized to ``velocity_rms``; position integrates it and reflects at
    ±bound so excursions stay on screen. Returns (positions, velocities) as
    (n_ticks, 2) arrays with the off-axis component zero.
    """
    if duration_s <= 0:
        raise ConfigurationError(f"duration must be positive, got {duration_s}")
    if axis not in ("horizontal", "vertical"):
        raise ConfigurationError(f"axis must be horizontal or vertical, got {axis!r}")
    n = int(round(duration_s * update_hz))
    dt = 1.0 / update_hz
    white = rng.normal(size=n)
    a = math.exp(-2.0 * math.pi * smoothing_hz * dt)
    smooth = np.empty(n)
    state = 0.0
    for i in range(n):
        state = a * state + (1.0 - a) * white[i]
        smooth[i] = state
    rms = float(np.sqrt(np.mean(smooth**2)))
    scale = velocity_rms / rms if rms > 0 else 0.0

    pos = 0.0
    positions = np.zeros((n, 2))
    velocities = np.zeros((n, 2))
    col = 0 if axis == "horizontal" else 1
    flip = 1.0
    for i in range(n):
        v = flip * scale * smooth[i]
        candidate = pos + v * dt
        if abs(candidate) > bound:
            flip = -flip
            v = -v
            candidate = pos + v * dt
        pos = candidate
        positions[i, col] = pos
        velocities[i, col] = v
    return positions, velocities


def step_cursor(
    state: CursorState,
    decoded: tuple[float, float],
    dt: float,
    gain: float,
    mode: str,
) -> CursorState:
    """One Euler step of the cursor; 1D modes mask the off-axis component."""
    if dt <= 0 or gain <= 0:
        raise ConfigurationError(f"dt and gain must be positive, got dt={dt} gain={gain}")
    u, v = float(decoded[0]), float(decoded[1])
    if not (math.isfinite(u) and math.isfinite(v)):
        raise ControlFault(f"non-finite decoded velocity ({u}, {v})")
    if mode == "horizontal1D":
        v = 0.0
    elif mode == "vertical1D":
        u = 0.0
    elif mode != "full2D":
        raise ConfigurationError(f"unknown mode {mode!r}")
    x = min(1.0, max(-1.0, state.position[0] + gain * u * dt))
    y = min(1.0, max(-1.0, state.position[1] + gain * v * dt))
    if mode == "horizontal1D":
        y = 0.0
    elif mode == "vertical1D":
        x = 0.0
    return CursorState(position=(x, y), velocity=(u, v))


_TARGET_CENTERS = {
    "RT": (1.0, 0.0),
    "LT": (-1.0, 0.0),
    "TT": (0.0, 1.0),
    "BT": (0.0, -1.0),
}


def spawn_target(
    mode: str,
    rng: np.random.Generator,
    radius: float = 0.15,
    offset: float = 0.85,
    shown_at: float = 0.0,
) -> Target:
    """Draw a direction uniformly from the mode's set and place it on the edge."""
    directions = MODE_DIRECTIONS.get(mode)
    if directions is None:
        raise ConfigurationError(f"unknown mode {mode!r}")
    direction = directions[int(rng.integers(len(directions)))]
    ux, uy = _TARGET_CENTERS[direction]
    return Target(
        direction=direction,
        center=(ux * offset, uy * offset),
        radius=radius,
        shown_at=shown_at,
    )


def check_trial(
    state: CursorState,
    target: Target,
    elapsed: float,
    timeout: float = 15.0,
    wrong_direction_time: float = 0.0,
) -> TrialResult | None:
    """Hit inside the radius, timeout at the budget, otherwise None (ongoing)."""
    if elapsed < 0:
        raise ConfigurationError(f"elapsed must be nonnegative, got {elapsed}")
    dx = state.position[0] - target.center[0]
    dy = state.position[1] - target.center[1]
    if math.hypot(dx, dy) <= target.radius:
        return TrialResult(
            direction=target.direction,
            outcome="hit",
            time_to_target=elapsed,
            wrong_direction_time=wrong_direction_time,
        )
    if elapsed >= timeout:
        return TrialResult(
            direction=target.direction,
            outcome="timeout",
            time_to_target=None,
            wrong_direction_time=wrong_direction_time,
        )
    return None


def group_runs(results: list[TrialResult], run_size: int) -> list[list[TrialResult]]:
    if run_size < 1:
        raise ConfigurationError(f"run_size must be positive, got {run_size}")
    return [results[i : i + run_size] for i in range(0, len(results), run_size)]


def _stats(results: list[TrialResult], runs: list[list[TrialResult]]) -> DirectionStats:
    n = len(results)
    hits = [r for r in results if r.outcome == "hit"]
    rate = len(hits) / n
    per_run = [
        sum(1 for r in run if r.outcome == "hit") / len(run) for run in runs if run
    ]
    sd = float(np.std(per_run, ddof=1)) if len(per_run) >= 2 else 0.0
    mean_ttt = (
        float(np.mean([r.time_to_target for r in hits])) if hits else None
    )
    return DirectionStats(
        n_trials=n,
        n_hits=len(hits),
        success_rate=rate,
        success_sd=sd,
        mean_time_to_target=mean_ttt,
    )


def summarize(runs: list[list[TrialResult]]) -> RunSummary:
    """Success rates per direction and overall; sd across per-run rates."""
    results = [r for run in runs for r in run]
    if not results:
        raise EmptySummaryError("no trial results to summarize")
    by_direction = {}
    for direction in ("RT", "LT", "TT", "BT"):
        dir_results = [r for r in results if r.direction == direction]
        if not dir_results:
            continue
        dir_runs = [[r for r in run if r.direction == direction] for run in runs]
        by_direction[direction] = _stats(dir_results, dir_runs)
    return RunSummary(
        overall=_stats(results, runs),
        by_direction=by_direction,
        n_runs=len(runs),
    )


@dataclass
class TickOutcome:
    """What one engine tick produced: events to log and the live snapshot."""

    events: list[dict] = field(default_factory=list)
    trial_result: TrialResult | None = None
    gate_active: bool = False


class TargetAcquisitionEngine:
    """One test phase: pre-run pause, then trials separated by intertrials.

    Advance with tick(decoded, t_s); the engine spawns targets from its own
    seeded generator, steps the cursor, applies the gate statistics, and
    resets the cursor to center between trials.
    """

    def __init__(self, mode: str, params: ProtocolParams, rng: np.random.Generator):
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}")
        self.mode = mode
        self.params = params
        self.rng = rng
        self.cursor = CursorState()
        self.target: Target | None = None
        self.n_trials = params.trials_for(mode)
        self.results: list[TrialResult] = []
        self.trial_index = 0
        self._dt = 1.0 / params.update_hz
        self._pause_ticks = int(round(params.intertrial_s * params.update_hz))
        self._ticks_until_trial = self._pause_ticks  # pre-run pause
        self._trial_ticks = 0
        self._wrong_time = 0.0
        self.trial_elapsed = 0.0

    @property
    def done(self) -> bool:
        return len(self.results) >= self.n_trials

    def tick(self, decoded: tuple[float, float], t_s: float) -> TickOutcome:
        out = TickOutcome()
        if self.done:
            return out
        if self.target is None:
            self._ticks_until_trial -= 1
            if self._ticks_until_trial <= 0:
                self._start_trial(t_s, out)
            return out

        active = activation_gate(decoded, self.target.direction)
        out.gate_active = active
        try:
            self.cursor = step_cursor(
                self.cursor, decoded, self._dt, self.params.gain, self.mode
            )
        except ControlFault as fault:
            out.events.append(
                {"t_s": t_s, "type": "fault", "trial": self.trial_index, "reason": str(fault)}
            )
        self._trial_ticks += 1
        if not active:
            self._wrong_time += self._dt
        self.trial_elapsed = self._trial_ticks * self._dt
        result = check_trial(
            self.cursor,
            self.target,
            self.trial_elapsed,
            timeout=self.params.timeout_s,
            wrong_direction_time=self._wrong_time,
        )
        if result is not None:
            self._end_trial(result, t_s, out)
        return out

    def _start_trial(self, t_s: float, out: TickOutcome) -> None:
        self.trial_index += 1
        self.cursor = CursorState()
        self.target = spawn_target(
            self.mode,
            self.rng,
            radius=self.params.target_radius,
            offset=self.params.target_offset,
            shown_at=t_s,
        )
        self._trial_ticks = 0
        self._wrong_time = 0.0
        self.trial_elapsed = 0.0
        out.events.append({"t_s": t_s, "type": "trial_start", "trial": self.trial_index})
        out.events.append(
            {
                "t_s": t_s,
                "type": "target_shown",
                "trial": self.trial_index,
                "direction": self.target.direction,
                "center": list(self.target.center),
                "radius": self.target.radius,
            }
        )

    def _end_trial(self, result: TrialResult, t_s: float, out: TickOutcome) -> None:
        self.results.append(result)
        out.trial_result = result
        if result.outcome == "hit":
            out.events.append(
                {
                    "t_s": t_s,
                    "type": "hit",
                    "trial": self.trial_index,
                    "time_to_target_s": result.time_to_target,
                }
            )
        else:
            out.events.append({"t_s": t_s, "type": "timeout", "trial": self.trial_index})
        out.events.append(
            {
                "t_s": t_s,
                "type": "trial_end",
                "trial": self.trial_index,
                "outcome": result.outcome,
                "wrong_direction_time_s": result.wrong_direction_time,
            }
        )
        self.target = None
        self.cursor = CursorState()
        self._ticks_until_trial = self._pause_ticks
