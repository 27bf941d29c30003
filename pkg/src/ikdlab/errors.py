"""Exception types shared across the pipeline."""


class IkdError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(IkdError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(IkdError, ValueError):
    """A file could not be parsed; message includes the offending location."""


class CorruptLogError(ValidationError):
    """A log is unusable (e.g. empty after idle trimming, flat sensor stream)."""


class InsufficientOverlapError(ValidationError):
    """Two streams share less than the minimum time overlap required."""


class FitError(IkdError, ValueError):
    """Geometric fit failed (degenerate or collinear input)."""


class InferenceError(IkdError, RuntimeError):
    """Model produced an unusable output (non-finite prediction)."""
