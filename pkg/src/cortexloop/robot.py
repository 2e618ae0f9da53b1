"""Robot gesture link: outcome-to-gesture mapping, direction gate, UDP codec,
and the virtual actuator that stands in for the physical robot.

Wire format (8 bytes): magic 0xA5, version 0x01, gesture id, R, G, B,
sequence number big-endian. The mapping table below is frozen:

    right  -> RIGHT_HAND, green (0, 255, 0)
    left   -> LEFT_HAND,  blue  (0, 0, 255)
    top    -> BOTH_HANDS, cyan  (0, 255, 255)
    bottom -> HEAD_SHAKE, red   (255, 0, 0)
"""

from __future__ import annotations

import json
import socket
import threading
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Callable

from .errors import (
    ConfigurationError,
    FramingError,
    ProtocolError,
    UnknownCommandError,
)

MAGIC = 0xA5
VERSION = 0x01
SEQ_WINDOW = 32          # stale-ordering window for 16-bit sequence numbers
DEFAULT_DEAD_ZONE = 0.02
DEFAULT_ACTUATOR_ADDR = ("127.0.0.1", 9750)


class Gesture(IntEnum):
    IDLE = 0
    RIGHT_HAND = 1
    LEFT_HAND = 2
    BOTH_HANDS = 3
    HEAD_SHAKE = 4


# direction -> (gesture, eye RGB); "mixture of green and blue" rendered as cyan
CANONICAL_MAP: dict[str, tuple[Gesture, tuple[int, int, int]]] = {
    "RT": (Gesture.RIGHT_HAND, (0, 255, 0)),
    "LT": (Gesture.LEFT_HAND, (0, 0, 255)),
    "TT": (Gesture.BOTH_HANDS, (0, 255, 255)),
    "BT": (Gesture.HEAD_SHAKE, (255, 0, 0)),
}

IDLE_RGB = (0, 0, 0)

# Reference servo-angle table (degrees) for bridging gestures to a 12-servo
# humanoid. Order: head yaw, waist yaw, R shoulder roll, R shoulder pitch,
# R hand grip, L shoulder roll, L shoulder pitch, L hand grip, R foot yaw,
# R foot pitch, L foot yaw, L foot pitch. Gestures stay atomic in this
# package; the actuator never interprets these.
GESTURE_SERVO_ANGLES: dict[Gesture, tuple[int, ...]] = {
    Gesture.IDLE:       (90, 90, 0, 130, 90, 180, 50, 90, 90, 90, 90, 90),
    Gesture.RIGHT_HAND: (90, 90, 80, 40, 60, 180, 50, 90, 90, 90, 90, 90),
    Gesture.LEFT_HAND:  (90, 90, 0, 130, 90, 100, 140, 120, 90, 90, 90, 90),
    Gesture.BOTH_HANDS: (90, 90, 80, 40, 60, 100, 140, 120, 90, 90, 90, 90),
    Gesture.HEAD_SHAKE: (60, 90, 0, 130, 90, 180, 50, 90, 90, 90, 90, 90),
}


@dataclass(frozen=True)
class GestureCommand:
    gesture: Gesture
    eye_rgb: tuple[int, int, int]
    seq: int

    def __post_init__(self):
        if not 0 <= self.seq <= 0xFFFF:
            raise ConfigurationError(f"seq {self.seq} outside 16-bit range")
        if len(self.eye_rgb) != 3 or any(not 0 <= c <= 255 for c in self.eye_rgb):
            raise ConfigurationError(f"eye_rgb {self.eye_rgb} outside 0..255")


def map_offline(position: tuple[float, float], mode: str,
                dead_zone: float = DEFAULT_DEAD_ZONE, seq: int = 0) -> GestureCommand:
    """Position-sign mapping used when replaying recorded cursor positions.

    Horizontal mode keys on x (right/left), vertical on y (top/bottom);
    components inside the dead zone produce IDLE.
    """
    x, y = position
    if mode == "horizontal1D":
        value, pos_dir, neg_dir = x, "RT", "LT"
    elif mode == "vertical1D":
        value, pos_dir, neg_dir = y, "TT", "BT"
    else:
        raise ConfigurationError(f"offline mapping needs a 1D mode, got {mode!r}")
    if abs(value) <= dead_zone:
        return GestureCommand(Gesture.IDLE, IDLE_RGB, seq)
    gesture, rgb = CANONICAL_MAP[pos_dir if value > 0 else neg_dir]
    return GestureCommand(gesture, rgb, seq)


_AXIS_SIGN = {"RT": (0, 1.0), "LT": (0, -1.0), "TT": (1, 1.0), "BT": (1, -1.0)}


def activation_gate(decoded: tuple[float, float], direction: str,
                    dead_zone: float = DEFAULT_DEAD_ZONE) -> bool:
    """True iff decoded velocity points toward the target's cardinal direction.

    The component along the target's axis must carry the target's sign and
    exceed the dead zone.
    """
    axis, sign = _AXIS_SIGN[direction]
    component = decoded[axis] * sign
    return component > dead_zone


def map_online(direction: str, active: bool, seq: int = 0) -> GestureCommand:
    """Gated live mapping: the canonical gesture while active, else IDLE."""
    if not active:
        return GestureCommand(Gesture.IDLE, IDLE_RGB, seq)
    gesture, rgb = CANONICAL_MAP[direction]
    return GestureCommand(gesture, rgb, seq)


def encode_command(cmd: GestureCommand) -> bytes:
    r, g, b = cmd.eye_rgb
    return bytes([
        MAGIC, VERSION, int(cmd.gesture), r, g, b,
        (cmd.seq >> 8) & 0xFF, cmd.seq & 0xFF,
    ])


def decode_command(datagram: bytes) -> GestureCommand:
    if len(datagram) != 8:
        raise FramingError(f"datagram must be 8 bytes, got {len(datagram)}")
    if datagram[0] != MAGIC:
        raise ProtocolError(f"bad magic byte 0x{datagram[0]:02X}")
    if datagram[1] != VERSION:
        raise ProtocolError(f"unsupported protocol version {datagram[1]}")
    if datagram[2] > 4:
        raise UnknownCommandError(f"unknown gesture id {datagram[2]}")
    return GestureCommand(
        gesture=Gesture(datagram[2]),
        eye_rgb=(datagram[3], datagram[4], datagram[5]),
        seq=(datagram[6] << 8) | datagram[7],
    )


@dataclass
class RobotState:
    """Virtual actuator state, a pure fold over the decoded command stream."""

    gesture: Gesture = Gesture.IDLE
    eye_rgb: tuple[int, int, int] = IDLE_RGB
    last_seq: int | None = None
    last_update: float = 0.0
    moving: bool = False


def _is_stale(seq: int, last_seq: int | None) -> bool:
    if last_seq is None:
        return False
    behind = (last_seq - seq) & 0xFFFF
    return behind < SEQ_WINDOW  # duplicates (behind == 0) are stale too


def apply_command(state: RobotState, cmd: GestureCommand, now: float) -> RobotState:
    """Fold one command into the state; stale sequence numbers are ignored.

    Eye color is held on IDLE (the lamps latch their last color while the
    robot is still).
    """
    if _is_stale(cmd.seq, state.last_seq):
        return state
    eyes = state.eye_rgb if cmd.gesture == Gesture.IDLE else cmd.eye_rgb
    return RobotState(
        gesture=cmd.gesture,
        eye_rgb=eyes,
        last_seq=cmd.seq,
        last_update=now,
        moving=cmd.gesture != Gesture.IDLE,
    )


class CommandSender:
    """Assigns wrapping sequence numbers and hands datagrams to a transport."""

    def __init__(self, transport: Callable[[bytes], None]):
        self._transport = transport
        self._seq = 0

    def send(self, gesture: Gesture, eye_rgb: tuple[int, int, int]) -> GestureCommand:
        cmd = GestureCommand(gesture, eye_rgb, self._seq)
        self._transport(encode_command(cmd))
        self._seq = (self._seq + 1) & 0xFFFF
        return cmd


class UdpTransport:
    """Fire-and-forget datagram sender."""

    def __init__(self, host: str, port: int):
        self.addr = (host, port)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def __call__(self, datagram: bytes) -> None:
        self._sock.sendto(datagram, self.addr)

    def close(self) -> None:
        self._sock.close()


class VirtualActuator:
    """Software stand-in for the robot: decodes datagrams, folds state,
    appends a JSON Lines state-change log.

    Decode errors are counted, never fatal; feed() is the in-process path and
    serve_udp()/UdpActuatorServer the network path.
    """

    def __init__(self, log_path: Path | str | None = None):
        self.state = RobotState()
        self.error_counts = {"framing": 0, "protocol": 0, "unknown_command": 0}
        self.transitions: list[dict] = []
        self._log_fp = open(log_path, "w") if log_path else None

    def feed(self, datagram: bytes, now: float) -> RobotState:
        try:
            cmd = decode_command(datagram)
        except FramingError:
            self.error_counts["framing"] += 1
            return self.state
        except ProtocolError:
            self.error_counts["protocol"] += 1
            return self.state
        except UnknownCommandError:
            self.error_counts["unknown_command"] += 1
            return self.state
        new_state = apply_command(self.state, cmd, now)
        if new_state is not self.state and (
            new_state.gesture != self.state.gesture
            or new_state.eye_rgb != self.state.eye_rgb
        ):
            entry = {
                "t_s": now,
                "gesture": new_state.gesture.name,
                "eye_rgb": list(new_state.eye_rgb),
                "seq": cmd.seq,
            }
            self.transitions.append(entry)
            if self._log_fp:
                self._log_fp.write(json.dumps(entry) + "\n")
                self._log_fp.flush()
        self.state = new_state
        return self.state

    def close(self) -> None:
        if self._log_fp:
            self._log_fp.close()
            self._log_fp = None


class UdpActuatorServer:
    """Threaded UDP listener wrapping a VirtualActuator."""

    def __init__(self, host: str, port: int, log_path: Path | str | None = None):
        self.actuator = VirtualActuator(log_path)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._sock.settimeout(0.2)
        self.addr = self._sock.getsockname()
        self._stop = threading.Event()
        self._started = threading.Event()
        self._t0: float | None = None
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> None:
        self._thread.start()
        self._started.wait(timeout=2.0)

    def _run(self) -> None:
        import time

        self._t0 = time.monotonic()
        self._started.set()
        while not self._stop.is_set():
            try:
                datagram, _ = self._sock.recvfrom(64)
            except socket.timeout:
                continue
            except OSError:
                break
            now = time.monotonic() - self._t0
            self.actuator.feed(datagram, now)

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=2.0)
        self._sock.close()
        self.actuator.close()
