"""
Metric spaces used for template comparison.

Points live in one of three variants (bit strings, symbol strings, real
vectors) and are compared under a SpaceDescriptor naming one of five
distance/similarity functions.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt, model_validator

from biomatch.errors import (
    DimensionMismatch,
    LengthMismatch,
    NonFiniteInput,
    VariantMismatch,
    ZeroVector,
)



class PointKind(str, Enum):
    BIT_STRING = "bits"
    SYMBOL_STRING = "symbols"
    REAL_VECTOR = "reals"


class SpaceKind(str, Enum):
    HAMMING = "hamming"
    LEVENSHTEIN = "levenshtein"
    EUCLIDEAN = "euclidean"
    CHEBYSHEV = "chebyshev"
    COSINE = "cosine"


class Orientation(str, Enum):
    DISTANCE = "distance"
    SIMILARITY = "similarity"


POINT_KIND_FOR_SPACE = {
    SpaceKind.HAMMING: PointKind.BIT_STRING,
    SpaceKind.LEVENSHTEIN: PointKind.SYMBOL_STRING,
    SpaceKind.EUCLIDEAN: PointKind.REAL_VECTOR,
    SpaceKind.CHEBYSHEV: PointKind.REAL_VECTOR,
    SpaceKind.COSINE: PointKind.REAL_VECTOR,
}


@dataclass(frozen=True, eq=False)
class MetricPoint:
    """
    A value in one of the supported spaces.

    ``data`` is a read-only uint8 array of 0/1 for bit strings, a ``str`` for
    symbol strings and a read-only float64 array for real vectors.
    """

    kind: PointKind
    data: Union[np.ndarray, str]

    @classmethod
    def bits(cls, values: Union[str, Sequence[int], np.ndarray]) -> "MetricPoint":
        if isinstance(values, str):
            values = [int(ch) for ch in values]
        arr = np.asarray(values, dtype=np.uint8).reshape(-1)
        if np.any(arr > 1):
            raise ValueError("bit strings may only hold 0 and 1")
        arr = arr.copy()
        arr.setflags(write=False)
        return cls(PointKind.BIT_STRING, arr)

    @classmethod
    def symbols(cls, values: Union[str, Sequence[str]]) -> "MetricPoint":
        return cls(PointKind.SYMBOL_STRING, "".join(values))

    @classmethod
    def vector(cls, values: Union[Sequence[float], np.ndarray]) -> "MetricPoint":
        arr = np.array(values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("real vectors may not contain NaN or infinity")
        arr.setflags(write=False)
        return cls(PointKind.REAL_VECTOR, arr)

    def __len__(self) -> int:
        return len(self.data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricPoint) or other.kind != self.kind:
            return NotImplemented
        if self.kind == PointKind.SYMBOL_STRING:
            return self.data == other.data
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        if self.kind == PointKind.SYMBOL_STRING:
            return hash((self.kind, self.data))
        return hash((self.kind, self.data.tobytes()))

    def __repr__(self) -> str:
        if self.kind == PointKind.BIT_STRING:
            return f"MetricPoint.bits('{''.join(str(b) for b in self.data)}')"
        if self.kind == PointKind.SYMBOL_STRING:
            return f"MetricPoint.symbols({self.data!r})"
        return f"MetricPoint.vector({self.data.tolist()!r})"


class SpaceDescriptor(BaseModel):
    """The pair (space kind, dimension) plus the score orientation it implies."""

    model_config = ConfigDict(frozen=True)

    kind: SpaceKind
    dimension: PositiveInt
    orientation: Orientation = Orientation.DISTANCE

    @model_validator(mode="before")
    @classmethod
    def _default_orientation(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("orientation") is None:
            kind = SpaceKind(data.get("kind"))
            data = dict(data)
            data["orientation"] = Orientation.SIMILARITY if kind == SpaceKind.COSINE else Orientation.DISTANCE
        return data

    @model_validator(mode="after")
    def _check_orientation(self) -> "SpaceDescriptor":
        is_similarity = self.orientation == Orientation.SIMILARITY
        if is_similarity != (self.kind == SpaceKind.COSINE):
            raise ValueError("orientation must be 'similarity' exactly when kind is 'cosine'")
        return self

    @property
    def point_kind(self) -> PointKind:
        return POINT_KIND_FOR_SPACE[self.kind]

    def conform(self, point: MetricPoint) -> MetricPoint:
        """Return ``point`` unchanged if it belongs to this space, raise otherwise."""
        if not isinstance(point, MetricPoint):
            raise VariantMismatch(f"expected a MetricPoint, got {type(point).__name__}")
        if point.kind != self.point_kind:
            raise VariantMismatch(f"{self.kind.value} space expects {self.point_kind.value}, got {point.kind.value}")
        size = len(point)
        if self.kind == SpaceKind.LEVENSHTEIN:
            if size > self.dimension:
                raise DimensionMismatch(f"symbol string of length {size} exceeds maximum {self.dimension}")
        elif size != self.dimension:
            raise DimensionMismatch(f"point has dimension {size}, space has {self.dimension}")
        return point


def _as_bits(x: Union[MetricPoint, Sequence[int], str, np.ndarray]) -> np.ndarray:
    if isinstance(x, MetricPoint):
        if x.kind != PointKind.BIT_STRING:
            raise VariantMismatch(f"expected a bit string, got {x.kind.value}")
        return x.data
    return MetricPoint.bits(x).data


def _as_reals(x: Union[MetricPoint, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(x, MetricPoint):
        if x.kind != PointKind.REAL_VECTOR:
            raise VariantMismatch(f"expected a real vector, got {x.kind.value}")
        return x.data
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("real vectors may not contain NaN or infinity")
    return arr


def _as_symbols(x: Union[MetricPoint, str, Sequence[str]]) -> Sequence:
    if isinstance(x, MetricPoint):
        if x.kind != PointKind.SYMBOL_STRING:
            raise VariantMismatch(f"expected a symbol string, got {x.kind.value}")
        return x.data
    return x


def _pair_of_reals(x, y):
    a, b = _as_reals(x), _as_reals(y)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.size} vs {b.size}")
    return a, b


def hamming_weight(x) -> int:
    return int(np.count_nonzero(_as_bits(x)))


def xor_bits(x, y) -> MetricPoint:
    a, b = _as_bits(x), _as_bits(y)
    if a.shape != b.shape:
        raise LengthMismatch(f"bit strings differ in length: {a.size} vs {b.size}")
    return MetricPoint.bits(np.bitwise_xor(a, b))


def hamming_distance(x, y) -> int:
    a, b = _as_bits(x), _as_bits(y)
    if a.shape != b.shape:
        raise LengthMismatch(f"bit strings differ in length: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def levenshtein_distance(x, y) -> int:
    """Edit distance with unit insertion, deletion and substitution costs."""
    s, t = _as_symbols(x), _as_symbols(y)
    if len(s) < len(t):
        s, t = t, s
    # Two rolling rows of the (|s|+1) x (|t|+1) table.
    previous = list(range(len(t) + 1))
    for i, a in enumerate(s, start=1):
        current = [i] + [0] * len(t)
        for j, b in enumerate(t, start=1):
            current[j] = min(
                previous[j] + 1,             # deletion
                current[j - 1] + 1,          # insertion
                previous[j - 1] + (a != b),  # substitution
            )
        previous = current
    return previous[-1]


def euclidean_distance(x, y) -> float:
    a, b = _pair_of_reals(x, y)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def chebyshev_distance(x, y) -> float:
    a, b = _pair_of_reals(x, y)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def cosine_similarity(x, y) -> float:
    a, b = _pair_of_reals(x, y)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity is undefined for the zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_distance(x, y) -> float:
    """1 - cosine similarity. Not a metric: it can violate the triangle inequality."""
    return 1.0 - cosine_similarity(x, y)


_DISPATCH = {
    SpaceKind.HAMMING: hamming_distance,
    SpaceKind.LEVENSHTEIN: levenshtein_distance,
    SpaceKind.EUCLIDEAN: euclidean_distance,
    SpaceKind.CHEBYSHEV: chebyshev_distance,
    SpaceKind.COSINE: cosine_similarity,
}


def compare(space: SpaceDescriptor, x: MetricPoint, y: MetricPoint) -> float:
    """Score two points under ``space``; read the result using ``space.orientation``."""
    space.conform(x)
    space.conform(y)
    return float(_DISPATCH[space.kind](x, y))
