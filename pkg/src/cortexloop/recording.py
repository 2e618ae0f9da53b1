"""Session recording directory: one directory per session, versioned layout.

    format_version   single integer, bumped on any breaking layout change
    config.json      fully resolved session configuration and seeds
    signals.csv      as-acquired (post-filter) frames, signal-core CSV format
    reference.csv    per-sample reference velocities inside training trials
    decoded.csv      per-tick decoded velocities during test phases
    events.jsonl     protocol event log
    model.json       decoder fitted in the calibration phase
    robot.jsonl      in-process actuator state transitions (when used)
    intents.jsonl    inbound surrogate intent timeline (surrogate sessions)
    status.json      {"completed": bool, "error": str | null}

All streams share the session time base: integer sample index t and
t_s = t / sample_rate. No wall-clock timestamps appear in any stream, which
is what makes recorded sessions byte-reproducible.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError
from .signals import (
    SampleFrame,
    SignalConfig,
    format_signal_row,
    iter_signal_file,
    read_signal_config,
    write_signal_header,
)
from .task import EVENT_TYPES

RECORDING_FORMAT_VERSION = 1

SIGNALS = "signals.csv"
REFERENCE = "reference.csv"
DECODED = "decoded.csv"
EVENTS = "events.jsonl"
MODEL = "model.json"
CONFIG = "config.json"
STATUS = "status.json"
ROBOT_LOG = "robot.jsonl"
INTENTS = "intents.jsonl"


class RecordingWriter:
    """Incremental writer used by the session loop."""

    def __init__(
        self,
        directory: Path | str,
        cfg: SignalConfig,
        config_doc: dict,
        record_signals: bool = True,
    ):
        self.path = Path(directory)
        self.path.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.record_signals = record_signals
        (self.path / "format_version").write_text(f"{RECORDING_FORMAT_VERSION}\n")
        (self.path / CONFIG).write_text(json.dumps(config_doc, indent=2) + "\n")
        self._signals = None
        if record_signals:
            self._signals = open(self.path / SIGNALS, "w")
            write_signal_header(self._signals, cfg)
        self._reference = open(self.path / REFERENCE, "w")
        self._reference.write("t,u,v\n")
        self._decoded = open(self.path / DECODED, "w")
        self._decoded.write("t_s,u,v\n")
        self._events = open(self.path / EVENTS, "w")
        self._intents = None

    def write_frame(self, frame: SampleFrame) -> None:
        if self._signals is not None:
            self._signals.write(format_signal_row(frame))

    def write_reference(self, t: int, u: float, v: float) -> None:
        self._reference.write(f"{t},{float(u)!r},{float(v)!r}\n")

    def write_decoded(self, t_s: float, u: float, v: float) -> None:
        self._decoded.write(f"{float(t_s)!r},{float(u)!r},{float(v)!r}\n")

    def write_event(self, event: dict) -> None:
        if event.get("type") not in EVENT_TYPES:
            raise ConfigurationError(f"refusing to log unknown event type {event.get('type')!r}")
        self._events.write(json.dumps(event) + "\n")

    def write_intent(self, t_s: float, u: float, v: float) -> None:
        if self._intents is None:
            self._intents = open(self.path / INTENTS, "w")
        self._intents.write(json.dumps({"t_s": t_s, "u": u, "v": v}) + "\n")

    def robot_log_path(self) -> Path:
        return self.path / ROBOT_LOG

    def model_path(self) -> Path:
        return self.path / MODEL

    def finalize(self, completed: bool, error: str | None = None) -> None:
        for fp in (self._signals, self._reference, self._decoded, self._events, self._intents):
            if fp is not None:
                fp.close()
        (self.path / STATUS).write_text(
            json.dumps({"completed": completed, "error": error}) + "\n"
        )


class SessionRecording:
    """Read-side view of a recording directory."""

    def __init__(self, directory: Path | str):
        self.path = Path(directory)
        version_file = self.path / "format_version"
        if not version_file.exists():
            raise ConfigurationError(f"{directory} is not a session recording")
        version = int(version_file.read_text().strip())
        if version != RECORDING_FORMAT_VERSION:
            raise ConfigurationError(
                f"recording format_version {version} unsupported; this build reads "
                f"{RECORDING_FORMAT_VERSION}"
            )
        self.config_doc = json.loads((self.path / CONFIG).read_text())

    @property
    def signals_path(self) -> Path:
        return self.path / SIGNALS

    @property
    def model_path(self) -> Path:
        return self.path / MODEL

    @property
    def status(self) -> dict:
        status_file = self.path / STATUS
        if not status_file.exists():
            return {"completed": False, "error": "missing status (session died mid-run)"}
        return json.loads(status_file.read_text())

    @property
    def completed(self) -> bool:
        return bool(self.status.get("completed"))

    def signal_config(self) -> SignalConfig:
        return read_signal_config(self.signals_path)

    def iter_frames(self):
        return iter_signal_file(self.signals_path)

    def signal_array(self) -> np.ndarray:
        """All frames as a (T, N) array; verifies indices are 0..T-1."""
        frames = list(self.iter_frames())
        if not frames:
            return np.empty((0, self.signal_config().n_channels))
        out = np.empty((len(frames), len(frames[0].voltages)))
        for i, frame in enumerate(frames):
            if frame.t != i:
                raise ParseError(
                    f"signal stream is not consecutive at row {i} (t={frame.t})"
                )
            out[i] = frame.voltages
        return out

    def events(self) -> list[dict]:
        """Event log with unknown types rejected, as replay requires."""
        out = []
        with open(self.path / EVENTS) as fp:
            for line_no, line in enumerate(fp, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"events.jsonl: {exc}", line=line_no)
                if event.get("type") not in EVENT_TYPES:
                    raise ParseError(
                        f"events.jsonl: unknown event type {event.get('type')!r}",
                        line=line_no,
                    )
                out.append(event)
        return out

    def reference(self) -> dict[int, tuple[float, float]]:
        """Per-sample reference velocities keyed by sample index."""
        out = {}
        with open(self.path / REFERENCE) as fp:
            header = fp.readline().strip()
            if header != "t,u,v":
                raise ParseError(f"reference.csv: bad header {header!r}", line=1)
            for line_no, line in enumerate(fp, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ParseError("reference.csv: expected t,u,v", line=line_no)
                out[int(parts[0])] = (float(parts[1]), float(parts[2]))
        return out

    def decoded(self) -> np.ndarray:
        """Decoded velocity stream as (n_ticks, 3) rows of (t_s, u, v)."""
        rows = []
        with open(self.path / DECODED) as fp:
            header = fp.readline().strip()
            if header != "t_s,u,v":
                raise ParseError(f"decoded.csv: bad header {header!r}", line=1)
            for line_no, line in enumerate(fp, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != 3:
                    raise ParseError("decoded.csv: expected t_s,u,v", line=line_no)
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
        return np.array(rows) if rows else np.empty((0, 3))

    def has_model(self) -> bool:
        return self.model_path.exists()
