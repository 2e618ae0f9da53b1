"""Exception types shared across the pipeline."""


class CortexLoopError(Exception):
    """Base class for all pipeline errors."""


class ConfigurationError(CortexLoopError):
    """Mismatched or invalid configuration (channel counts, lengths, modes)."""


class SignalError(CortexLoopError):
    """Bad signal content, e.g. non-finite voltages."""

    def __init__(self, message: str, channel: int | None = None, t: int | None = None):
        super().__init__(message)
        self.channel = channel
        self.t = t


class SequencingError(CortexLoopError):
    """Sample index gap; the caller must resynchronize the stream."""


class NotReadyError(CortexLoopError):
    """Operation requires a warmed-up lag window."""


class EmptyTrainingError(CortexLoopError):
    """Recording contains no training trials."""


class DataError(CortexLoopError):
    """Non-finite values in training data."""


class SingularFitError(CortexLoopError):
    """Rank-deficient least-squares system with ridge_lambda = 0."""


class UndefinedCorrelationError(CortexLoopError):
    """Observed series has zero variance; correlation undefined.

    Carries the RMSE-only numbers so callers can still report them.
    """

    def __init__(self, message: str, rmse_x: float, rmse_y: float):
        super().__init__(message)
        self.rmse_x = rmse_x
        self.rmse_y = rmse_y


class ParseError(CortexLoopError):
    """Malformed row in a signal or recording file."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ProtocolError(CortexLoopError):
    """Datagram with wrong magic byte or protocol version."""


class FramingError(CortexLoopError):
    """Datagram of the wrong length."""


class UnknownCommandError(CortexLoopError):
    """Datagram names a gesture id outside the known set."""


class ControlFault(CortexLoopError):
    """Non-finite decoded velocity reached the cursor integrator."""


class EmptySummaryError(CortexLoopError):
    """No trial results to summarize."""


class AbortedSessionError(CortexLoopError):
    """Session could not finish; a partial recording was flagged on disk."""

    def __init__(self, message: str, recording_path=None):
        super().__init__(message)
        self.recording_path = recording_path
