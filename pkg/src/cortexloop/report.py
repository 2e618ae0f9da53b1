"""Offline analysis of a session recording: success tables, per-trial cursor
traces, and robot-activation timelines, emitted as a JSON + CSV bundle.

Traces and activation segments are rebuilt by replaying the decoded-velocity
stream through a fresh task engine seeded identically to the live one; the
engine is deterministic, so the rebuilt trajectories are exactly what the
session showed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .decoder import load_model
from .recording import SessionRecording
from .robot import DEFAULT_DEAD_ZONE, activation_gate
from .seeds import rng_for
from .subject import scenario_from_dict
from .task import (
    TargetAcquisitionEngine,
    TrialResult,
    group_runs,
    phase_for_mode,
    summarize,
)


def activation_flags(
    decoded: list[tuple[float, float]], direction: str, dead_zone: float = DEFAULT_DEAD_ZONE
) -> list[bool]:
    """Per-tick activation of the robot for a trial's decoded velocities."""
    return [activation_gate(d, direction, dead_zone) for d in decoded]


def active_segments(flags: list[bool], t_s: list[float], dt: float) -> list[tuple[float, float]]:
    """Merge consecutive active ticks into [start, end) time segments."""
    segments = []
    start = None
    for flag, t in zip(flags, t_s):
        if flag and start is None:
            start = t - dt
        elif not flag and start is not None:
            segments.append((start, t - dt))
            start = None
    if start is not None:
        segments.append((start, t_s[-1]))
    return segments


def count_gaps(flags: list[bool]) -> int:
    """Inactive runs strictly between active runs: the bar-plot discontinuities."""
    segments = 0
    in_active = False
    for flag in flags:
        if flag and not in_active:
            segments += 1
        in_active = flag
    return max(0, segments - 1)


@dataclass
class TrialTrace:
    """One rebuilt trial: tick times, cursor path, and activation flags."""

    phase: str
    trial: int
    direction: str
    outcome: str | None
    t_s: list[float] = field(default_factory=list)
    positions: list[tuple[float, float]] = field(default_factory=list)
    decoded: list[tuple[float, float]] = field(default_factory=list)
    flags: list[bool] = field(default_factory=list)

    @property
    def gaps(self) -> int:
        return count_gaps(self.flags)


def trial_results_from_events(events: list[dict]) -> dict[str, list[TrialResult]]:
    """Reassemble per-phase TrialResults from the event log."""
    out: dict[str, list[TrialResult]] = {}
    directions: dict[tuple[str, int], str] = {}
    hit_times: dict[tuple[str, int], float] = {}
    for event in events:
        phase = event.get("phase", "")
        if not phase.startswith("test_"):
            continue
        key = (phase, event.get("trial"))
        if event["type"] == "target_shown":
            directions[key] = event["direction"]
        elif event["type"] == "hit":
            hit_times[key] = event["time_to_target_s"]
        elif event["type"] == "trial_end":
            out.setdefault(phase, []).append(
                TrialResult(
                    direction=directions[key],
                    outcome=event["outcome"],
                    time_to_target=hit_times.get(key),
                    wrong_direction_time=event.get("wrong_direction_time_s", 0.0),
                )
            )
    return out


def rebuild_traces(recording: SessionRecording) -> list[TrialTrace]:
    """Re-run the engine over the recorded decoded stream to recover traces."""
    config_doc = recording.config_doc
    scenario = scenario_from_dict(config_doc["scenario"])
    params = scenario.protocol
    root = scenario.root_seed
    test_modes = list(config_doc.get("test_modes", []))
    events = recording.events()
    phase_starts = [
        (e["t_s"], e["phase"]) for e in events
        if e["type"] == "phase_start" and e["phase"].startswith("test_")
    ]
    decoded = recording.decoded()
    traces: list[TrialTrace] = []
    for occurrence, mode in enumerate(test_modes):
        phase = phase_for_mode(mode)
        if occurrence >= len(phase_starts):
            break
        start_s = phase_starts[occurrence][0]
        end_s = (
            phase_starts[occurrence + 1][0]
            if occurrence + 1 < len(phase_starts)
            else float("inf")
        )
        rows = [
            (float(r[0]), float(r[1]), float(r[2]))
            for r in decoded
            if start_s < r[0] <= end_s
        ]
        engine = TargetAcquisitionEngine(
            mode, params, rng_for(root, f"targets-{mode}", occurrence)
        )
        current: TrialTrace | None = None
        for t_s, u, v in rows:
            if engine.done:
                break
            direction = engine.target.direction if engine.target else None
            out = engine.tick((u, v), t_s)
            if engine.target is not None and direction is None:
                # a trial started on this tick
                current = TrialTrace(
                    phase=phase,
                    trial=engine.trial_index,
                    direction=engine.target.direction,
                    outcome=None,
                )
                traces.append(current)
                continue
            if direction is None or current is None:
                continue
            current.t_s.append(t_s)
            current.positions.append(engine.cursor.position)
            current.decoded.append((u, v))
            current.flags.append(out.gate_active)
            if out.trial_result is not None:
                current.outcome = out.trial_result.outcome
                current = None
    return traces


def generate_report(recording_dir: Path | str, out_dir: Path | str | None = None) -> dict:
    """Success tables, fit report, traces, and activation timelines.

    Returns the report document; when out_dir is given, also writes
    report.json, table1.csv, traces.csv, and activation.csv there.
    """
    recording = SessionRecording(recording_dir)
    events = recording.events()
    per_phase = trial_results_from_events(events)
    scenario = scenario_from_dict(recording.config_doc["scenario"])
    run_size = scenario.protocol.run_size
    partial = not recording.completed or not per_phase

    tables = {}
    for phase, results in per_phase.items():
        tables[phase] = summarize(group_runs(results, run_size)).to_dict()

    fit_report = None
    if recording.has_model():
        fit_report = load_model(recording.model_path).fit_report.to_dict()

    traces = rebuild_traces(recording) if per_phase else []
    dt = 1.0 / scenario.protocol.update_hz

    doc = {
        "partial": partial,
        "status": recording.status,
        "fit_report": fit_report,
        "tables": tables,
        "activation": {
            "per_trial_gaps": [
                {"phase": tr.phase, "trial": tr.trial, "direction": tr.direction,
                 "gaps": tr.gaps, "outcome": tr.outcome}
                for tr in traces
            ]
        },
        "config": recording.config_doc,
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(doc, indent=2) + "\n")
        with open(out / "table1.csv", "w") as fp:
            fp.write("phase,direction,n_trials,n_hits,success_rate,success_sd,mean_time_to_target\n")
            for phase, table in tables.items():
                rows = dict(table["by_direction"])
                rows["overall"] = table["overall"]
                for direction, stats in rows.items():
                    mean_ttt = stats["mean_time_to_target"]
                    fp.write(
                        f"{phase},{direction},{stats['n_trials']},{stats['n_hits']},"
                        f"{stats['success_rate']:.4f},{stats['success_sd']:.4f},"
                        f"{'' if mean_ttt is None else f'{mean_ttt:.4f}'}\n"
                    )
        with open(out / "traces.csv", "w") as fp:
            fp.write("phase,trial,t_s,x,y\n")
            for tr in traces:
                for t_s, (x, y) in zip(tr.t_s, tr.positions):
                    fp.write(f"{tr.phase},{tr.trial},{t_s!r},{x!r},{y!r}\n")
        with open(out / "activation.csv", "w") as fp:
            fp.write("phase,trial,direction,start_s,end_s\n")
            for tr in traces:
                if not tr.t_s:
                    continue
                for start, end in active_segments(tr.flags, tr.t_s, dt):
                    fp.write(f"{tr.phase},{tr.trial},{tr.direction},{start!r},{end!r}\n")
    return doc
