"""
Exception hierarchy for biomatch.

Everything raised on purpose by the library derives from BiomatchError so the
CLI can map it to the runtime-fault exit code. Input validation failures also
derive from ValueError.
"""

from enum import Enum
from typing import Optional


class BiomatchError(Exception):
    """Base class for all biomatch errors."""


# metric-core

class SpaceMismatch(BiomatchError, ValueError):
    """A point does not conform to the space it is compared or stored under."""


class VariantMismatch(SpaceMismatch):
    """The point variant (bits, symbols, reals) does not match the space kind."""


class DimensionMismatch(SpaceMismatch):
    """Two operands, or an operand and a declared dimension, disagree in size."""


class LengthMismatch(DimensionMismatch):
    """Bit strings of different lengths."""


class NonFiniteInput(BiomatchError, ValueError):
    pass


class ZeroVector(BiomatchError, ValueError):
    pass


# learner

class ShapeMismatch(BiomatchError, ValueError):
    pass


class WindowTooLarge(BiomatchError, ValueError):
    pass


class NonFiniteActivation(BiomatchError, ArithmeticError):
    pass


class NonFiniteGradient(BiomatchError, ArithmeticError):
    pass


class DivergenceDetected(BiomatchError, ArithmeticError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")
        self.epoch = epoch
        self.loss = loss


class MalformedCircuit(BiomatchError, ValueError):
    pass


class LabelOutOfRange(BiomatchError, ValueError):
    pass


# matcher

class EmptyScoreSet(BiomatchError, ValueError):
    pass


class EmptyGrid(BiomatchError, ValueError):
    pass


# template-store

class CapacityExhausted(BiomatchError):
    """Identifier sampling kept colliding; lambda is far too small."""


class CapacityExceeded(BiomatchError):
    pass


class DuplicateId(BiomatchError, ValueError):
    pass


class CorruptReason(str, Enum):
    BAD_MAGIC = "bad_magic"
    BAD_VERSION = "bad_version"
    TRUNCATED = "truncated"
    MALFORMED = "malformed"


class _CorruptFile(BiomatchError, ValueError):
    def __init__(self, reason: CorruptReason, detail: Optional[str] = None):
        message = reason.value if detail is None else f"{reason.value}: {detail}"
        super().__init__(message)
        self.reason = reason
        self.detail = detail


class CorruptStore(_CorruptFile):
    pass


class CorruptModel(_CorruptFile):
    pass


# protocol / harness / cli

class AlreadyInitialized(BiomatchError):
    pass


class NotInitialized(BiomatchError):
    pass


class InvalidSpec(BiomatchError, ValueError):
    pass


class ConfigError(BiomatchError, ValueError):
    pass


class StageError(BiomatchError):
    """Failure inside one experiment stage; the original error is chained."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
