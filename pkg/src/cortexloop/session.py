"""Closed-loop session orchestration.

One SessionRunner drives the whole protocol on a logical 16 Hz tick clock
layered over the 128 Hz sample clock: pull frames from the signal source,
filter, maintain the lag window, and per tick decode, step the task engine,
gate and send robot commands, record every stream, and notify an optional
observer with a UI state message.

Everything is keyed to the sample clock: in max_speed mode the loop simply
never sleeps, so a full protocol runs in seconds with byte-identical outputs
to a realtime run.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .decoder import (
    DecoderModel,
    FitReport,
    TrainingSet,
    fit_decoder,
    load_model,
    save_model,
)
from .errors import (
    AbortedSessionError,
    ConfigurationError,
    CortexLoopError,
    EmptySummaryError,
    EmptyTrainingError,
)
from .recording import RecordingWriter, SessionRecording
from .robot import (
    CommandSender,
    Gesture,
    IDLE_RGB,
    UdpTransport,
    VirtualActuator,
    map_online,
)
from .seeds import rng_for
from .signals import CausalBandFilter, LagWindow, SignalConfig, embed_block
from .subject import (
    IntentPolicy,
    PolicyDriver,
    ReplaySource,
    Scenario,
    SurrogateSource,
    SyntheticSubject,
    WorldSnapshot,
    scenario_from_dict,
)
from .task import (
    MODES,
    PHASE_CALIBRATION,
    PHASE_TRAINING_H,
    PHASE_TRAINING_V,
    RunSummary,
    TargetAcquisitionEngine,
    group_runs,
    phase_for_mode,
    summarize,
    training_reference,
)

CLOCKS = ("max_speed", "realtime")
SOURCES = ("synthetic", "replay", "surrogate")


@dataclass
class SessionConfig:
    """Fully resolved configuration for one session."""

    scenario: Scenario
    test_modes: tuple[str, ...] = ("horizontal1D",)
    clock: str = "max_speed"
    source: str = "synthetic"
    replay_path: Path | None = None          # signals.csv to replay
    model_path: Path | None = None           # preload decoder instead of fitting
    robot_endpoint: tuple[str, int] | None = None  # UDP target; None -> in-process
    out_dir: Path | None = None              # None -> nothing written to disk
    ridge_lambda: float = 0.0
    record_signals: bool = True
    acquisition_filter: bool = False         # band-filter raw sources; built-in
                                             # sources emit as-acquired frames

    def validate(self) -> None:
        if self.clock not in CLOCKS:
            raise ConfigurationError(f"clock must be one of {CLOCKS}, got {self.clock!r}")
        if self.source not in SOURCES:
            raise ConfigurationError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.source == "surrogate" and self.clock == "max_speed":
            raise ConfigurationError(
                "max_speed clock is forbidden with a surrogate source: human "
                "input requires real time"
            )
        if self.source == "replay" and self.replay_path is None:
            raise ConfigurationError("replay source requires replay_path")
        for mode in self.test_modes:
            if mode not in MODES:
                raise ConfigurationError(f"unknown test mode {mode!r}")
        if self.ridge_lambda < 0:
            raise ConfigurationError(
                f"ridge_lambda must be nonnegative, got {self.ridge_lambda}"
            )
        cfg = self.scenario.signal_config
        params = self.scenario.protocol
        spt = cfg.sample_rate_hz / params.update_hz
        if abs(spt - round(spt)) > 1e-9 or round(spt) < 1:
            raise ConfigurationError(
                f"update rate {params.update_hz} Hz must divide the sample rate "
                f"{cfg.sample_rate_hz} Hz"
            )
        for name, seconds in (
            ("training_trial_s", params.training_trial_s),
            ("intertrial_s", params.intertrial_s),
        ):
            ticks = seconds * params.update_hz
            if abs(ticks - round(ticks)) > 1e-9:
                raise ConfigurationError(
                    f"{name}={seconds} must be a whole number of "
                    f"{1.0 / params.update_hz} s ticks"
                )

    def to_doc(self) -> dict:
        return {
            "format_version": 1,
            "scenario": self.scenario.to_dict(),
            "test_modes": list(self.test_modes),
            "clock": self.clock,
            "source": self.source,
            "ridge_lambda": self.ridge_lambda,
            "record_signals": self.record_signals,
            "acquisition_filter": self.acquisition_filter,
            "robot_endpoint": list(self.robot_endpoint) if self.robot_endpoint else None,
        }

    @classmethod
    def from_doc(cls, doc: dict, **overrides) -> "SessionConfig":
        base = dict(
            scenario=scenario_from_dict(doc["scenario"]),
            test_modes=tuple(doc.get("test_modes", ("horizontal1D",))),
            clock=doc.get("clock", "max_speed"),
            source=doc.get("source", "synthetic"),
            ridge_lambda=doc.get("ridge_lambda", 0.0),
            record_signals=doc.get("record_signals", True),
            acquisition_filter=doc.get("acquisition_filter", False),
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class SessionResult:
    summary: dict
    mode_summaries: dict[str, RunSummary]
    model: DecoderModel | None
    fit_report: FitReport | None
    recording_path: Path | None
    events: list[dict]
    decoded: list[tuple[float, float, float]]
    latencies_ms: list[float] = field(default_factory=list)


class SessionRunner:
    """Single-owner driver of the closed loop; all mutation happens here."""

    def __init__(self, config: SessionConfig, observer=None):
        config.validate()
        self.config = config
        self.scenario = config.scenario
        self.cfg: SignalConfig = self.scenario.signal_config
        self.params = self.scenario.protocol
        self.dt = 1.0 / self.params.update_hz
        self.spt = int(round(self.cfg.sample_rate_hz / self.params.update_hz))
        self.observer = observer
        self.abort_requested = threading.Event()
        self.skip_phase_requested = threading.Event()

        root = self.scenario.root_seed
        self.source_kind = config.source
        if config.source == "replay":
            self.source = ReplaySource(config.replay_path, expected_cfg=self.cfg)
            self.subject = None
        else:
            self.subject = SyntheticSubject(
                self.cfg, self.scenario.subject, rng_for(root, "subject")
            )
            if config.source == "surrogate":
                self.source = SurrogateSource(self.subject)
            else:
                self.source = self.subject
        # recordings hold the as-acquired stream, so replays never refilter
        use_filter = config.acquisition_filter and config.source != "replay"
        self.filter = CausalBandFilter(self.cfg) if use_filter else None

        self.window = LagWindow(self.cfg)
        self.writer: RecordingWriter | None = None
        if config.out_dir is not None:
            self.writer = RecordingWriter(
                config.out_dir, self.cfg, config.to_doc(), config.record_signals
            )

        self.actuator: VirtualActuator | None = None
        self._udp: UdpTransport | None = None
        if config.robot_endpoint is not None:
            self._udp = UdpTransport(*config.robot_endpoint)
            transport = self._udp
        else:
            log_path = self.writer.robot_log_path() if self.writer else None
            self.actuator = VirtualActuator(log_path)
            transport = lambda datagram: self.actuator.feed(datagram, self.now_s)
        self.sender = CommandSender(transport)
        self.robot_view = (Gesture.IDLE.name, list(IDLE_RGB))

        self.t = 0                    # next sample index
        self.global_tick = 0
        self.now_s = 0.0
        self._wall_t0: float | None = None
        self.model: DecoderModel | None = None
        self.fit_report: FitReport | None = None
        self.events: list[dict] = []
        self.decoded: list[tuple[float, float, float]] = []
        self.latencies_ms: list[float] = []
        self._buffer_signals = True   # in-memory copy of phase-1 stream for the fit
        self._signal_buffer: list[np.ndarray] = []
        self._reference: dict[int, tuple[float, float]] = {}
        self._training_spans: list[tuple[int, int]] = []
        self.mode_summaries: dict[str, RunSummary] = {}
        self.current_phase: str | None = None
        self._all_results = []

    # --- controls (callable from other threads) ------------------------------

    def request_abort(self) -> None:
        self.abort_requested.set()

    def request_next_mode(self) -> None:
        self.skip_phase_requested.set()

    def submit_intent(self, u: float, v: float) -> None:
        """Feed surrogate intent; stamped with the session's logical clock."""
        if self.source_kind != "surrogate":
            return
        self.source.submit(u, v, self.now_s)
        if self.writer:
            self.writer.write_intent(self.now_s, u, v)

    # --- plumbing -------------------------------------------------------------

    def _emit_event(self, event: dict) -> None:
        self.events.append(event)
        if self.writer:
            self.writer.write_event(event)

    def _phase_start(self, phase: str) -> None:
        self.current_phase = phase
        self._emit_event({"t_s": self.now_s, "type": "phase_start", "phase": phase})

    def _pull_sample(self):
        frame = self.source.next_frame()
        if frame is None:
            raise AbortedSessionError(
                f"signal source exhausted at sample {self.t} (phase {self.current_phase})",
                recording_path=self.writer.path if self.writer else None,
            )
        if self.filter is not None:
            frame = self.filter.step(frame)
        if self.writer:
            self.writer.write_frame(frame)
        if self._buffer_signals:
            self._signal_buffer.append(frame.voltages)
        self.window.push(frame)
        self.t += 1
        return frame

    def _finish_tick(self, tick_end_s: float, state: dict | None) -> None:
        self.global_tick += 1
        self.now_s = tick_end_s
        if self.observer is not None and state is not None:
            self.observer(state)
        if self.config.clock == "realtime":
            if self._wall_t0 is None:
                self._wall_t0 = time.monotonic() - tick_end_s
            deadline = self._wall_t0 + tick_end_s
            delay = deadline - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        if self.abort_requested.is_set():
            raise AbortedSessionError(
                "session aborted by control message",
                recording_path=self.writer.path if self.writer else None,
            )

    def _state_message(self, tick_end_s: float, cursor, target, decoded, trial) -> dict:
        return {
            "type": "state",
            "t_s": tick_end_s,
            "phase": self.current_phase,
            "cursor": [cursor[0], cursor[1]],
            "target": (
                {
                    "direction": target.direction,
                    "center": [target.center[0], target.center[1]],
                    "radius": target.radius,
                }
                if target is not None
                else None
            ),
            "decoded": [decoded[0], decoded[1]],
            "robot": {"gesture": self.robot_view[0], "eye_rgb": list(self.robot_view[1])},
            "trial": trial,
        }

    def _send_command(self, direction: str | None, active: bool) -> None:
        if direction is None:
            gesture, rgb = Gesture.IDLE, IDLE_RGB
        else:
            decided = map_online(direction, active)
            gesture, rgb = decided.gesture, decided.eye_rgb
        self.sender.send(gesture, rgb)
        if gesture != Gesture.IDLE:
            self.robot_view = (gesture.name, list(rgb))
        else:
            self.robot_view = (Gesture.IDLE.name, self.robot_view[1])

    def _consume_skip(self) -> bool:
        if self.skip_phase_requested.is_set():
            self.skip_phase_requested.clear()
            return True
        return False

    # --- phases ----------------------------------------------------------------

    def _rest_ticks(self, n_ticks: int) -> None:
        for _ in range(n_ticks):
            tick_end_s = (self.global_tick + 1) * self.dt
            if self.subject is not None and self.source_kind == "synthetic":
                self.subject.set_intent(0.0, 0.0)
            for _ in range(self.spt):
                self._pull_sample()
            state = self._state_message(
                tick_end_s, (0.0, 0.0), None, (0.0, 0.0), None
            )
            self._finish_tick(tick_end_s, state)

    def _phase_training(self, axis: str) -> None:
        phase = PHASE_TRAINING_H if axis == "horizontal" else PHASE_TRAINING_V
        self._phase_start(phase)
        root = self.scenario.root_seed
        policy = IntentPolicy(
            mode="track_reference",
            effort=self.scenario.policy.effort,
            reaction_delay_s=self.scenario.policy.reaction_delay_s,
            wrong_direction_prob=self.scenario.policy.wrong_direction_prob,
        )
        driver = PolicyDriver(
            policy, self.params.update_hz, rng_for(root, f"policy-train-{axis}")
        )
        rest_ticks = int(round(self.params.intertrial_s * self.params.update_hz))
        trial_ticks = int(round(self.params.training_trial_s * self.params.update_hz))
        for i in range(self.params.training_trials_per_axis):
            self._rest_ticks(rest_ticks)
            rng = rng_for(root, f"reference-{axis}", i)
            positions, velocities = training_reference(
                axis,
                self.params.training_trial_s,
                rng,
                update_hz=self.params.update_hz,
            )
            t0 = self.t
            self._emit_event(
                {
                    "t_s": self.now_s,
                    "type": "trial_start",
                    "phase": phase,
                    "trial": i + 1,
                    "t": t0,
                }
            )
            for k in range(trial_ticks):
                tick_end_s = (self.global_tick + 1) * self.dt
                ref_vel = (velocities[k, 0], velocities[k, 1])
                intent = driver.tick(WorldSnapshot(reference_velocity=ref_vel))
                if self.subject is not None and self.source_kind == "synthetic":
                    self.subject.set_intent(*intent)
                for _ in range(self.spt):
                    self._pull_sample()
                    sample_t = self.t - 1
                    self._reference[sample_t] = ref_vel
                    if self.writer:
                        self.writer.write_reference(sample_t, ref_vel[0], ref_vel[1])
                state = self._state_message(
                    tick_end_s,
                    (positions[k, 0], positions[k, 1]),
                    None,
                    (0.0, 0.0),
                    {"index": i + 1, "elapsed_s": (k + 1) * self.dt},
                )
                self._finish_tick(tick_end_s, state)
            self._training_spans.append((t0, self.t))
            self._emit_event(
                {
                    "t_s": self.now_s,
                    "type": "trial_end",
                    "phase": phase,
                    "trial": i + 1,
                    "t": self.t,
                    "outcome": "hit",
                }
            )

    def _phase_calibration(self) -> None:
        self._phase_start(PHASE_CALIBRATION)
        self._buffer_signals = False
        if self.config.model_path is not None:
            self.model = load_model(self.config.model_path)
            self.model.check_config(self.cfg)
            self.fit_report = self.model.fit_report
        else:
            signals = np.vstack(self._signal_buffer)
            self._signal_buffer = []
            ts = build_training_set(signals, self._training_spans, self._reference, self.cfg)
            try:
                self.model = fit_decoder(ts, self.config.ridge_lambda)
            except CortexLoopError as exc:
                raise AbortedSessionError(
                    f"decoder fit failed during calibration: {exc}",
                    recording_path=self.writer.path if self.writer else None,
                )
            self.fit_report = self.model.fit_report
        if self.writer:
            save_model(self.model, self.writer.model_path())

    def _phase_test(self, mode: str, occurrence: int) -> None:
        phase = phase_for_mode(mode)
        self._phase_start(phase)
        root = self.scenario.root_seed
        engine = TargetAcquisitionEngine(
            mode, self.params, rng_for(root, f"targets-{mode}", occurrence)
        )
        policy = IntentPolicy(
            mode="seek_target",
            effort=self.scenario.policy.effort,
            reaction_delay_s=self.scenario.policy.reaction_delay_s,
            wrong_direction_prob=self.scenario.policy.wrong_direction_prob,
        )
        driver = PolicyDriver(
            policy, self.params.update_hz, rng_for(root, f"policy-{mode}", occurrence)
        )
        hits = 0
        while not engine.done:
            if self._consume_skip():
                break
            tick_end_s = (self.global_tick + 1) * self.dt
            world = WorldSnapshot(
                cursor_position=engine.cursor.position,
                target_center=engine.target.center if engine.target else None,
            )
            intent = driver.tick(world)
            if self.subject is not None and self.source_kind == "synthetic":
                self.subject.set_intent(*intent)
            for _ in range(self.spt - 1):
                self._pull_sample()
            t_in = time.perf_counter()
            self._pull_sample()
            features = self.window.feature_vector()
            u, v = self.model.predict(features)
            direction = engine.target.direction if engine.target else None
            out = engine.tick((u, v), tick_end_s)
            self._send_command(direction, out.gate_active)
            self.latencies_ms.append((time.perf_counter() - t_in) * 1e3)
            if self.writer:
                self.writer.write_decoded(tick_end_s, u, v)
            self.decoded.append((tick_end_s, u, v))
            for event in out.events:
                event["phase"] = phase
                self._emit_event(event)
            if out.trial_result is not None and out.trial_result.outcome == "hit":
                hits += 1
            state = self._state_message(
                tick_end_s,
                engine.cursor.position,
                engine.target,
                (u, v),
                {
                    "index": engine.trial_index,
                    "elapsed_s": engine.trial_elapsed,
                    "hits": hits,
                    "completed": len(engine.results),
                    "total": engine.n_trials,
                },
            )
            self._finish_tick(tick_end_s, state)
        if engine.results:
            self.mode_summaries[mode] = summarize(
                group_runs(engine.results, self.params.run_size)
            )
            self._all_results.extend(engine.results)

    # --- entry point -------------------------------------------------------------

    def run(self) -> SessionResult:
        try:
            self._phase_training("horizontal")
            self._phase_training("vertical")
            self._phase_calibration()
            for occurrence, mode in enumerate(self.config.test_modes):
                self._phase_test(mode, occurrence)
        except AbortedSessionError:
            if self.writer:
                self.writer.finalize(completed=False, error="aborted")
            self._close_robot()
            raise
        if self.writer:
            self.writer.finalize(completed=True)
        self._close_robot()
        return SessionResult(
            summary=self._summary_doc(),
            mode_summaries=self.mode_summaries,
            model=self.model,
            fit_report=self.fit_report,
            recording_path=self.writer.path if self.writer else None,
            events=self.events,
            decoded=self.decoded,
            latencies_ms=self.latencies_ms,
        )

    def _close_robot(self) -> None:
        if self._udp is not None:
            self._udp.close()
        if self.actuator is not None:
            self.actuator.close()

    def _summary_doc(self) -> dict:
        doc = {
            "modes": {m: s.to_dict() for m, s in self.mode_summaries.items()},
            "fit_report": self.fit_report.to_dict() if self.fit_report else None,
            "recording": str(self.writer.path) if self.writer else None,
            "completed": True,
        }
        try:
            combined = summarize(group_runs(self._all_results, self.params.run_size))
            doc["combined"] = combined.to_dict()
        except EmptySummaryError:
            doc["combined"] = None
        return doc


def build_training_set(
    signals: np.ndarray,
    spans: list[tuple[int, int]],
    reference: dict[int, tuple[float, float]],
    cfg: SignalConfig,
) -> TrainingSet:
    """Shared row builder: one row per warmed-up sample inside each trial span."""
    if not spans:
        raise EmptyTrainingError("no training trials")
    feats, us, vs = [], [], []
    warmup = cfg.lag_count * cfg.lag_stride
    for t0, t1 in spans:
        feats.append(embed_block(signals[t0:t1], cfg))
        for t in range(t0 + warmup, t1):
            ref = reference[t]
            us.append(ref[0])
            vs.append(ref[1])
    return TrainingSet(
        features=np.vstack(feats),
        u=np.array(us),
        v=np.array(vs),
        trial_ids=list(range(len(spans))),
        cfg=cfg,
    )


def run_session(config: SessionConfig, observer=None) -> SessionResult:
    """Execute the full protocol described by the config."""
    return SessionRunner(config, observer=observer).run()


def replay_session(
    recording_dir: Path | str,
    model_path: Path | str | None = None,
    out_dir: Path | str | None = None,
    observer=None,
) -> SessionResult:
    """Re-run a recorded session with its own signals as the source.

    The protocol schedule, seeds, and decoder inputs are identical, so the
    regenerated event log and decoded stream reproduce the recording exactly.
    """
    recording = SessionRecording(recording_dir)
    config = SessionConfig.from_doc(
        recording.config_doc,
        source="replay",
        clock="max_speed",
        replay_path=recording.signals_path,
        model_path=Path(model_path) if model_path else None,
        out_dir=Path(out_dir) if out_dir else None,
    )
    return run_session(config, observer=observer)
