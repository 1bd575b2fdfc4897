"""Error types raised across the toolkit.

Every failure mode that callers are expected to handle gets its own class so
CLI and library users can distinguish bad inputs from bad parameters without
string matching.
"""


class PipelineError(Exception):
    """Base class for all toolkit errors."""


class FormatError(PipelineError):
    """A file does not conform to its declared container format."""


class UnsupportedFormat(PipelineError):
    """The file is well formed but uses an encoding the toolkit does not read."""


class ParseError(PipelineError):
    """A text input failed to parse; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ZeroVariance(PipelineError):
    """An operation that needs spread got a constant input."""


class TooShort(PipelineError):
    """The input has fewer samples than the operation requires."""


class EmptyInput(PipelineError):
    """The operation requires at least one element."""


class BandTooNarrow(PipelineError):
    """A warping band narrower than the length difference admits no path."""


class LengthMismatch(PipelineError):
    """Two inputs that must have equal length do not."""


class BadParam(PipelineError):
    """A parameter value is outside its documented domain."""


class SingleClass(PipelineError):
    """Both classes are required but only one is present."""


class EmptyPool(PipelineError):
    """A model pool must contain at least one member."""


class DegenerateSplit(PipelineError):
    """A split produced a part that cannot support the downstream stage."""


class ShapeMismatch(PipelineError):
    """Array dimensions are inconsistent with each other or with the model."""


class LabelError(PipelineError):
    """A label value is outside {0, 1}."""


class NonFiniteFeature(PipelineError):
    """A feature value is NaN or infinite."""
