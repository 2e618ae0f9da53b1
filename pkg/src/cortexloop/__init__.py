"""Closed-loop BMI pipeline: decode intended velocity from multichannel
signals, drive a target-acquisition cursor task, and feed back robot gestures
over UDP."""

__version__ = "0.1.0"

from .signals import SignalConfig, SampleFrame, CausalBandFilter, LagWindow
from .decoder import DecoderModel, VelocityDecoder, LagEmbedder, FitReport
from .robot import Gesture, GestureCommand, encode_command, decode_command

__all__ = [
    "SignalConfig",
    "SampleFrame",
    "CausalBandFilter",
    "LagWindow",
    "DecoderModel",
    "VelocityDecoder",
    "LagEmbedder",
    "FitReport",
    "Gesture",
    "GestureCommand",
    "encode_command",
    "decode_command",
]
