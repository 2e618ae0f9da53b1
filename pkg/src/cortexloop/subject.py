"""Pluggable signal sources standing in for the human user.

SyntheticSubject encodes a 2-axis intended velocity into N channels through a
rank-2 mixing matrix, optionally delayed and corrupted by white channel
noise, colored background noise, and colored intent-execution noise (the
vertical axis gets an asymmetry multiplier on the latter, which is what makes
vertical tasks harder than horizontal ones in simulated runs).

ReplaySource streams a recorded signal file; SurrogateSource drives the same
synthetic body from externally submitted intent (a UI), holding the last
value and decaying to rest after half a second of silence.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import ConfigurationError
from .seeds import rng_for
from .signals import SampleFrame, SignalConfig, iter_signal_file, read_signal_config
from .task import ProtocolParams


@dataclass(frozen=True)
class SubjectParams:
    """Generative model knobs; scenario files carry these under "subject"."""

    mixing_seed: int | None = None        # draw a row-normalized rank-2 mixing
    mixing: list | None = None            # or give the N x 2 matrix explicitly
    noise_sigma: float = 0.0              # per-channel white noise std
    intent_lag: int = 0                   # pure delay on intent, in samples
    background_sigma: float = 0.0         # colored channel noise amplitude
    background_pole_hz: float = 8.0
    intent_noise_sigma: float = 0.0       # colored intent-execution noise std
    intent_noise_pole_hz: float = 0.2
    asymmetry: float = 1.5                # vertical multiplier on intent noise

    def __post_init__(self):
        if self.noise_sigma < 0 or self.background_sigma < 0 or self.intent_noise_sigma < 0:
            raise ConfigurationError("noise amplitudes must be nonnegative")
        if self.intent_lag < 0:
            raise ConfigurationError(f"intent_lag must be nonnegative, got {self.intent_lag}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IntentPolicy:
    """Behavioral stand-in for the subject; every constant here is ours."""

    mode: str = "idle"                    # track_reference | seek_target | idle
    effort: float = 0.4                   # intent speed scale, screen-units/s
    reaction_delay_s: float = 0.0
    wrong_direction_prob: float = 0.0     # flip chance per 0.5 s decision interval

    def __post_init__(self):
        if self.effort <= 0:
            raise ConfigurationError(f"effort must be positive, got {self.effort}")
        if not 0.0 <= self.wrong_direction_prob < 1.0:
            raise ConfigurationError(
                f"wrong_direction_prob must be in [0, 1), got {self.wrong_direction_prob}"
            )
        if self.mode not in ("track_reference", "seek_target", "idle"):
            raise ConfigurationError(f"unknown policy mode {self.mode!r}")


@dataclass(frozen=True)
class WorldSnapshot:
    """What the simulated subject can see on the monitor."""

    cursor_position: tuple[float, float] = (0.0, 0.0)
    target_center: tuple[float, float] | None = None
    reference_velocity: tuple[float, float] | None = None


def intent_for(policy: IntentPolicy, world: WorldSnapshot, flipped: bool = False
               ) -> tuple[float, float]:
    """Instantaneous intended velocity for one decision tick."""
    if policy.mode == "idle":
        return (0.0, 0.0)
    if policy.mode == "track_reference":
        if world.reference_velocity is None:
            return (0.0, 0.0)
        return world.reference_velocity
    # seek_target
    if world.target_center is None:
        return (0.0, 0.0)
    dx = world.target_center[0] - world.cursor_position[0]
    dy = world.target_center[1] - world.cursor_position[1]
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return (0.0, 0.0)
    sign = -1.0 if flipped else 1.0
    return (sign * policy.effort * dx / norm, sign * policy.effort * dy / norm)


class PolicyDriver:
    """Stateful policy evaluation: reaction delay and per-interval flips.

    Ticks at the engine update rate; the wrong-direction flip is redrawn once
    per 0.5 s decision interval.
    """

    DECISION_INTERVAL_S = 0.5

    def __init__(self, policy: IntentPolicy, update_hz: float, rng: np.random.Generator):
        self.policy = policy
        self.rng = rng
        delay_ticks = int(round(policy.reaction_delay_s * update_hz))
        self._ref_buffer: deque[tuple[float, float]] = deque(
            [(0.0, 0.0)] * delay_ticks, maxlen=delay_ticks + 1
        )
        self._interval_ticks = max(1, int(round(self.DECISION_INTERVAL_S * update_hz)))
        self._tick = 0
        self._flipped = False

    def tick(self, world: WorldSnapshot) -> tuple[float, float]:
        if self._tick % self._interval_ticks == 0:
            self._flipped = (
                self.policy.wrong_direction_prob > 0
                and self.rng.random() < self.policy.wrong_direction_prob
            )
        self._tick += 1
        if self.policy.mode == "track_reference":
            self._ref_buffer.append(world.reference_velocity or (0.0, 0.0))
            delayed = self._ref_buffer[0]
            return intent_for(self.policy, WorldSnapshot(reference_velocity=delayed))
        return intent_for(self.policy, world, flipped=self._flipped)


class SignalSource(Protocol):
    """Shared contract: consecutive frames at the configured sample rate."""

    cfg: SignalConfig

    def next_frame(self) -> SampleFrame | None: ...


class _OnePoleNoise:
    """Colored noise: white noise through a one-pole low-pass, unit-std output."""

    def __init__(self, n: int, pole_hz: float, fs: float, rng: np.random.Generator):
        self._a = math.exp(-2.0 * math.pi * pole_hz / fs)
        # stationary std of a * y + (1 - a) * w with unit white noise
        self._gain = math.sqrt((1.0 - self._a) / (1.0 + self._a))
        self._state = np.zeros(n)
        self._rng = rng
        self._n = n

    def step_normalized(self) -> np.ndarray:
        w = self._rng.normal(size=self._n)
        self._state = self._a * self._state + (1.0 - self._a) * w
        return self._state / self._gain


class SyntheticSubject:
    """Generative inverse of the decoder: voltages = mixing @ intent + noise."""

    def __init__(self, cfg: SignalConfig, params: SubjectParams, rng: np.random.Generator):
        self.cfg = cfg
        self.params = params
        self._rng = rng
        self.mixing = self._build_mixing()
        if np.linalg.matrix_rank(self.mixing) != 2:
            raise ConfigurationError("mixing matrix must have rank 2")
        self._intent_delay: deque[np.ndarray] = deque(
            [np.zeros(2)] * (params.intent_lag + 1), maxlen=params.intent_lag + 1
        )
        self._intent = np.zeros(2)
        self._t = 0
        self._axis_noise_scale = np.array(
            [params.intent_noise_sigma, params.intent_noise_sigma * params.asymmetry]
        )
        self._intent_noise = _OnePoleNoise(
            2, params.intent_noise_pole_hz, cfg.sample_rate_hz, rng
        )
        self._background = _OnePoleNoise(
            cfg.n_channels, params.background_pole_hz, cfg.sample_rate_hz, rng
        )

    def _build_mixing(self) -> np.ndarray:
        if self.params.mixing is not None:
            m = np.asarray(self.params.mixing, dtype=float)
            if m.shape != (self.cfg.n_channels, 2):
                raise ConfigurationError(
                    f"mixing must be ({self.cfg.n_channels}, 2), got {m.shape}"
                )
            return m
        seed = self.params.mixing_seed if self.params.mixing_seed is not None else 0
        draw = rng_for(seed, "mixing").normal(size=(self.cfg.n_channels, 2))
        # unit-norm rows give every channel the same mixing power, so
        # noise_sigma reads directly as a fraction of signal scale
        return draw / np.linalg.norm(draw, axis=1, keepdims=True)

    @property
    def next_t(self) -> int:
        return self._t

    def set_intent(self, u: float, v: float) -> None:
        self._intent = np.array([u, v], dtype=float)

    def next_frame(self) -> SampleFrame:
        self._intent_delay.append(self._intent.copy())
        executed = self._intent_delay[0]
        if self.params.intent_noise_sigma > 0:
            executed = executed + self._axis_noise_scale * self._intent_noise.step_normalized()
        voltages = self.mixing @ executed
        if self.params.background_sigma > 0:
            voltages = voltages + self.params.background_sigma * self._background.step_normalized()
        if self.params.noise_sigma > 0:
            voltages = voltages + self._rng.normal(
                scale=self.params.noise_sigma, size=self.cfg.n_channels
            )
        frame = SampleFrame(t=self._t, voltages=voltages)
        self._t += 1
        return frame


class ReplaySource:
    """Stream frames back out of a recorded signal file."""

    def __init__(self, path: Path | str, expected_cfg: SignalConfig | None = None):
        self.path = Path(path)
        self.cfg = read_signal_config(self.path)
        if expected_cfg is not None and self.cfg != expected_cfg:
            raise ConfigurationError(
                f"recording config {self.cfg} does not match session config {expected_cfg}"
            )
        self._iter = iter_signal_file(self.path)

    def next_frame(self) -> SampleFrame | None:
        return next(self._iter, None)


class SurrogateSource:
    """Synthetic body driven by externally submitted intent messages.

    Last value wins between messages (zero-order hold); if the newest message
    is older than ``staleness_s`` at the frame's timestamp, intent decays to
    rest. Message timestamps must be nondecreasing.
    """

    STALENESS_S = 0.5

    def __init__(self, subject: SyntheticSubject, staleness_s: float = STALENESS_S):
        self.subject = subject
        self.cfg = subject.cfg
        self.staleness_s = staleness_s
        self._pending: deque[tuple[float, float, float]] = deque()
        self._current: tuple[float, float, float] | None = None
        self.stale = False

    def submit(self, u: float, v: float, t_s: float) -> None:
        if not (math.isfinite(u) and math.isfinite(v)):
            raise ConfigurationError(f"intent must be finite, got ({u}, {v})")
        self._pending.append((t_s, u, v))

    def next_frame(self) -> SampleFrame:
        t_s = self.subject.next_t / self.cfg.sample_rate_hz
        while self._pending and self._pending[0][0] <= t_s:
            self._current = self._pending.popleft()
        if self._current is None or t_s - self._current[0] > self.staleness_s:
            self.stale = self._current is not None
            self.subject.set_intent(0.0, 0.0)
        else:
            self.stale = False
            self.subject.set_intent(self._current[1], self._current[2])
        return self.subject.next_frame()


@dataclass(frozen=True)
class Scenario:
    """The unit of reproducible experiments, loaded from a JSON file."""

    signal_config: SignalConfig = field(default_factory=SignalConfig)
    subject: SubjectParams = field(default_factory=SubjectParams)
    policy: IntentPolicy = field(default_factory=IntentPolicy)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    seeds: dict = field(default_factory=lambda: {"root": 0})

    @property
    def root_seed(self) -> int:
        return int(self.seeds.get("root", 0))

    def to_dict(self) -> dict:
        return {
            "signal_config": self.signal_config.to_dict(),
            "subject": self.subject.to_dict(),
            "policy": asdict(self.policy),
            "protocol": asdict(self.protocol),
            "seeds": dict(self.seeds),
        }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        return Scenario(
            signal_config=SignalConfig.from_dict(doc.get("signal_config", {})),
            subject=SubjectParams(**doc.get("subject", {})),
            policy=IntentPolicy(**doc.get("policy", {})),
            protocol=ProtocolParams(**doc.get("protocol", {})),
            seeds=doc.get("seeds", {"root": 0}),
        )
    except TypeError as exc:
        raise ConfigurationError(f"bad scenario document: {exc}")


def load_scenario(path: Path | str) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON: {exc}")
    return scenario_from_dict(doc)
