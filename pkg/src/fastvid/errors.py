"""Exception hierarchy for the pruning pipeline."""

from __future__ import annotations


class FastVIDError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(FastVIDError, ValueError):
    def __init__(self, field: str, expected, actual):
        self.field = field
        self.expected = expected
        self.actual = actual
        super().__init__(f"dimension mismatch in {field!r}: expected {expected}, got {actual}")


class NonFiniteError(FastVIDError, ValueError):
    def __init__(self, field: str, index: tuple[int, ...]):
        self.field = field
        self.index = index
        super().__init__(f"non-finite value in {field!r} at index {index}")


class InvalidDumpError(FastVIDError, ValueError):
    """A dump violates a value constraint other than shape or finiteness."""


class ConfigError(FastVIDError, ValueError):
    """A hyperparameter is outside its valid range."""


class DegenerateFeatureError(FastVIDError, ValueError):
    """A zero-norm vector reached a cosine similarity."""


class EmptyInputError(FastVIDError, ValueError):
    pass


class UnsupportedPoolingError(FastVIDError, ValueError):
    pass


class BudgetOverflowError(FastVIDError, ValueError):
    """More tokens requested than there are candidates to supply them."""


class BudgetUnderflowError(FastVIDError, ValueError):
    """A non-empty segment would retain zero tokens."""


class FormatError(FastVIDError):
    """Base class for serialization failures."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class DimensionOverflowError(FormatError):
    pass


class StageError(FastVIDError):
    """Wraps an error raised inside one pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
