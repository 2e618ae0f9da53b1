"""Streaming multichannel signal core: frames, causal band filters, lag windows.

The decoder consumes feature vectors laid out as
``[1, e_0[t], e_0[t-s], ..., e_0[t-K*s], e_1[t], ...]`` — element 0 is the
intercept slot, element ``1 + n*(K+1) + k`` is channel ``n`` delayed by
``k * lag_stride`` samples. Everything downstream (model coefficients, the
model file, the batch embedder) shares this layout.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np
from scipy.signal import butter, lfilter

from .errors import (
    ConfigurationError,
    NotReadyError,
    ParseError,
    SequencingError,
    SignalError,
)


@dataclass(frozen=True)
class SignalConfig:
    """Acquisition and embedding parameters, frozen for a whole session."""

    n_channels: int = 14
    sample_rate_hz: float = 128.0
    highpass_hz: float = 0.16
    lowpass_hz: float = 30.0
    lag_count: int = 5       # K: number of delayed taps per channel
    lag_stride: int = 1      # samples between taps

    def __post_init__(self):
        if self.n_channels < 1:
            raise ConfigurationError(f"n_channels must be positive, got {self.n_channels}")
        if self.sample_rate_hz <= 0:
            raise ConfigurationError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not (0 < self.highpass_hz < self.lowpass_hz < self.sample_rate_hz / 2):
            raise ConfigurationError(
                "cutoffs must satisfy 0 < highpass < lowpass < Nyquist, got "
                f"hp={self.highpass_hz} lp={self.lowpass_hz} fs={self.sample_rate_hz}"
            )
        if self.lag_count < 0:
            raise ConfigurationError(f"lag_count must be nonnegative, got {self.lag_count}")
        if self.lag_stride < 1:
            raise ConfigurationError(f"lag_stride must be positive, got {self.lag_stride}")
        if self.lag_count * self.lag_stride >= self.sample_rate_hz:
            raise ConfigurationError(
                f"lag window ({self.lag_count}*{self.lag_stride} samples) must span "
                f"less than one second at {self.sample_rate_hz} Hz"
            )

    @property
    def feature_length(self) -> int:
        """Intercept slot plus (K+1) taps for each of N channels."""
        return self.n_channels * (self.lag_count + 1) + 1

    @property
    def window_size(self) -> int:
        """Frames needed before feature vectors are available."""
        return self.lag_count * self.lag_stride + 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SignalConfig":
        return cls(**d)


@dataclass(frozen=True, slots=True)
class SampleFrame:
    """One tick of the sample clock: index ``t`` and N channel voltages."""

    t: int
    voltages: np.ndarray

    def validate(self, n_channels: int) -> None:
        if self.t < 0:
            raise SignalError(f"sample index must be nonnegative, got {self.t}", t=self.t)
        if len(self.voltages) != n_channels:
            raise ConfigurationError(
                f"frame t={self.t} has {len(self.voltages)} voltages, expected {n_channels}"
            )
        finite = np.isfinite(self.voltages)
        if not finite.all():
            ch = int(np.flatnonzero(~finite)[0])
            raise SignalError(
                f"non-finite voltage on channel {ch} at t={self.t}", channel=ch, t=self.t
            )


def _first_order_sections(cfg: SignalConfig) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear-transform first-order high-pass and low-pass coefficients.

    Returns (b, a) stacked as shape (2, 2): row 0 the high-pass section,
    row 1 the low-pass. scipy's design prewarps the cutoffs, so the digital
    response hits exactly -3 dB at each corner.
    """
    b_hp, a_hp = butter(1, cfg.highpass_hz, btype="highpass", fs=cfg.sample_rate_hz)
    b_lp, a_lp = butter(1, cfg.lowpass_hz, btype="lowpass", fs=cfg.sample_rate_hz)
    b = np.vstack([b_hp, b_lp])
    a = np.vstack([a_hp, a_lp])
    return b, a


class CausalBandFilter:
    """Per-channel first-order high-pass cascaded with a first-order low-pass.

    Causal, processes one frame at a time, keeps direct-form-II-transposed
    state per channel per section. A fresh instance starts from zero state.
    """

    def __init__(self, cfg: SignalConfig):
        self.cfg = cfg
        self._b, self._a = _first_order_sections(cfg)
        # z[section, channel]: one delay element per first-order section
        self._z = np.zeros((2, cfg.n_channels))

    def reset(self) -> None:
        self._z[:] = 0.0

    def step(self, frame: SampleFrame) -> SampleFrame:
        """Advance the filter one sample and return the filtered frame."""
        frame.validate(self.cfg.n_channels)
        x = np.asarray(frame.voltages, dtype=float)
        for sec in range(2):
            b0, b1 = self._b[sec]
            a1 = self._a[sec][1]
            y = b0 * x + self._z[sec]
            self._z[sec] = b1 * x - a1 * y
            x = y
        return SampleFrame(t=frame.t, voltages=x)

    def process_block(self, block: np.ndarray) -> np.ndarray:
        """Filter a (T, N) block; same difference equation as repeated step()."""
        if block.ndim != 2 or block.shape[1] != self.cfg.n_channels:
            raise ConfigurationError(
                f"block must be (T, {self.cfg.n_channels}), got shape {block.shape}"
            )
        x = np.asarray(block, dtype=float)
        for sec in range(2):
            x, zf = lfilter(self._b[sec], self._a[sec], x, axis=0, zi=self._z[sec][None, :])
            self._z[sec] = zf[0]
        return x


def analytic_cascade_gain(f_hz: float, cfg: SignalConfig) -> float:
    """Closed-form magnitude of the ideal first-order HP x LP cascade.

    This is the continuous-time product the streaming implementation is
    checked against; it is not used anywhere in the signal path.
    """
    r_hp = f_hz / cfg.highpass_hz
    r_lp = f_hz / cfg.lowpass_hz
    return (r_hp / np.sqrt(1.0 + r_hp**2)) * (1.0 / np.sqrt(1.0 + r_lp**2))


class LagWindow:
    """FIFO of the most recent ``K*stride + 1`` frames, consecutive in t."""

    def __init__(self, cfg: SignalConfig):
        self.cfg = cfg
        self._frames: deque[SampleFrame] = deque(maxlen=cfg.window_size)

    def __len__(self) -> int:
        return len(self._frames)

    @property
    def warm(self) -> bool:
        return len(self._frames) == self.cfg.window_size

    @property
    def newest_t(self) -> int | None:
        return self._frames[-1].t if self._frames else None

    def reset(self) -> None:
        self._frames.clear()

    def push(self, frame: SampleFrame) -> None:
        """Append a frame; its index must be exactly newest_t + 1."""
        frame.validate(self.cfg.n_channels)
        if self._frames and frame.t != self._frames[-1].t + 1:
            raise SequencingError(
                f"expected frame t={self._frames[-1].t + 1}, got t={frame.t}; "
                "caller must resynchronize"
            )
        self._frames.append(frame)

    def frames(self) -> tuple[SampleFrame, ...]:
        return tuple(self._frames)

    def feature_vector(self) -> np.ndarray:
        """Extract the decoder feature vector for the newest sample.

        Layout: index 0 is the constant 1; index ``1 + n*(K+1) + k`` holds
        channel n delayed by ``k * lag_stride`` samples.
        """
        if not self.warm:
            raise NotReadyError(
                f"lag window is cold: {len(self)}/{self.cfg.window_size} frames buffered"
            )
        cfg = self.cfg
        k_taps = cfg.lag_count + 1
        out = np.empty(cfg.feature_length)
        out[0] = 1.0
        newest = len(self._frames) - 1
        for k in range(k_taps):
            # strided write hits positions 1 + n*(K+1) + k for every channel n
            out[1 + k :: k_taps] = self._frames[newest - k * cfg.lag_stride].voltages
        return out


def embed_block(block: np.ndarray, cfg: SignalConfig) -> np.ndarray:
    """Batch version of LagWindow.feature_vector over a (T, N) signal block.

    Returns (T - K*stride, feature_length) rows; row i corresponds to sample
    index ``i + K*stride`` of the block. Layout matches feature_vector exactly.
    """
    block = np.asarray(block, dtype=float)
    if block.ndim != 2 or block.shape[1] != cfg.n_channels:
        raise ConfigurationError(
            f"expected (T, {cfg.n_channels}) block, got shape {block.shape}"
        )
    warmup = cfg.lag_count * cfg.lag_stride
    n_rows = block.shape[0] - warmup
    if n_rows <= 0:
        return np.empty((0, cfg.feature_length))
    k_taps = cfg.lag_count + 1
    out = np.empty((n_rows, cfg.feature_length))
    out[:, 0] = 1.0
    for n in range(cfg.n_channels):
        for k in range(k_taps):
            start = warmup - k * cfg.lag_stride
            out[:, 1 + n * k_taps + k] = block[start : start + n_rows, n]
    return out


# --- signal file format -----------------------------------------------------
#
# CSV with a mandatory sidecar header: the first line is '#' followed by the
# SignalConfig as JSON, the second line is 't,ch1,...,chN', then one row per
# frame. Voltages are written with repr() so a round trip is bit-exact.


def write_signal_header(fp: TextIO, cfg: SignalConfig) -> None:
    fp.write("#" + json.dumps(cfg.to_dict()) + "\n")
    fp.write("t," + ",".join(f"ch{i + 1}" for i in range(cfg.n_channels)) + "\n")


def format_signal_row(frame: SampleFrame) -> str:
    return str(frame.t) + "," + ",".join(repr(float(v)) for v in frame.voltages) + "\n"


def write_signal_file(path: Path | str, cfg: SignalConfig, frames) -> None:
    with open(path, "w") as fp:
        write_signal_header(fp, cfg)
        for frame in frames:
            fp.write(format_signal_row(frame))


def read_signal_config(path: Path | str) -> SignalConfig:
    """Read just the sidecar header of a signal file."""
    with open(path) as fp:
        first = fp.readline()
    if not first.startswith("#"):
        raise ParseError(f"{path}: missing sidecar config header", line=1)
    try:
        return SignalConfig.from_dict(json.loads(first[1:]))
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"{path}: bad sidecar config header: {exc}", line=1)


def iter_signal_file(path: Path | str) -> Iterator[SampleFrame]:
    """Yield frames from a signal file, validating structure as we go."""
    cfg = read_signal_config(path)
    with open(path) as fp:
        fp.readline()  # sidecar header
        header = fp.readline().rstrip("\n")
        expected = "t," + ",".join(f"ch{i + 1}" for i in range(cfg.n_channels))
        if header != expected:
            raise ParseError(f"{path}: bad column header {header!r}", line=2)
        for line_no, line in enumerate(fp, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != cfg.n_channels + 1:
                raise ParseError(
                    f"{path}: row has {len(parts) - 1} voltages, expected "
                    f"{cfg.n_channels}",
                    line=line_no,
                )
            try:
                t = int(parts[0])
                voltages = np.array([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}: unparseable row: {exc}", line=line_no)
            yield SampleFrame(t=t, voltages=voltages)
