"""Exception types shared across the toolkit."""


class FallcolorError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FallcolorError):
    """Input violates a documented invariant (bad manifest, bad params, ...)."""


class ArityError(ValidationError):
    """Feature vector length does not match the schema."""


class FormatError(FallcolorError):
    """A file is structurally not what the reader expects."""


class ParseError(FormatError):
    """Unparseable text, with the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCloudError(FallcolorError):
    """An operation that needs points received an empty cloud."""


class InsufficientPointsError(FallcolorError):
    """Cloud too small for the requested neighborhood computation."""


class DegenerateInputError(FallcolorError):
    """Data admits no meaningful answer (zero variance, fewer points than clusters, ...)."""


class NoFoliageError(FallcolorError):
    """No Green or Yellow points: the yellowness index is undefined."""


class InsufficientDataError(FallcolorError):
    """Too few observations for the requested statistic."""
