"""
Threshold decisions, one-to-many identification and the accuracy statistics
(FMR, FNMR, EER, ROC, gallery scaling).

Rates are defined on similarity-oriented scores: a false match is an impostor
score strictly above the threshold, a false non-match a genuine score at or
below it. Distance scores are negated together with the thresholds before
counting.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from biomatch.errors import EmptyGrid, EmptyScoreSet, NonFiniteInput, SpaceMismatch
from biomatch.spaces import MetricPoint, Orientation, SpaceDescriptor, compare
from biomatch.template_store import Gallery, TemplateRecord

logger = logging.getLogger(__name__)

ROC_HEADER = "threshold,fmr,fnmr"
SCALING_VALIDITY_LIMIT = 0.1


class ScoreLabel(str, Enum):
    GENUINE = "genuine"
    IMPOSTOR = "impostor"


class DecisionReason(str, Enum):
    MATCH = "match"
    NO_MATCH = "no_match"
    UNKNOWN_ID = "unknown_id"


@dataclass(frozen=True)
class ScoreSet:
    """Labelled comparison scores sharing one orientation."""

    values: np.ndarray
    labels: Tuple[ScoreLabel, ...]
    orientation: Orientation = Orientation.SIMILARITY

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("scores must be finite")
        labels = tuple(ScoreLabel(label) for label in self.labels)
        if len(labels) != values.size:
            raise ValueError(f"{values.size} scores but {len(labels)} labels")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @classmethod
    def of(
        cls,
        values: Iterable[float],
        label: ScoreLabel,
        orientation: Orientation = Orientation.SIMILARITY,
    ) -> "ScoreSet":
        values = list(values)
        return cls(values, (label,) * len(values), orientation)

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[Tuple[float, ScoreLabel]], orientation: Orientation = Orientation.SIMILARITY
    ) -> "ScoreSet":
        pairs = list(pairs)
        return cls([value for value, _ in pairs], tuple(label for _, label in pairs), orientation)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreSet):
            return NotImplemented
        return (
            self.orientation == other.orientation
            and self.labels == other.labels
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    @property
    def scores(self) -> List[Tuple[float, ScoreLabel]]:
        return [(float(v), label) for v, label in zip(self.values, self.labels)]

    def restrict(self, label: ScoreLabel) -> "ScoreSet":
        mask = np.array([lab == label for lab in self.labels], dtype=bool)
        return ScoreSet(self.values[mask], (label,) * int(mask.sum()), self.orientation)

    def genuine(self) -> "ScoreSet":
        return self.restrict(ScoreLabel.GENUINE)

    def impostor(self) -> "ScoreSet":
        return self.restrict(ScoreLabel.IMPOSTOR)

    def similarity_values(self) -> np.ndarray:
        return -self.values if self.orientation == Orientation.DISTANCE else self.values


@dataclass(frozen=True)
class ThresholdGrid:
    thresholds: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(t) for t in self.thresholds)
        if not values:
            raise EmptyGrid("threshold grid is empty")
        if not all(math.isfinite(t) for t in values):
            raise NonFiniteInput("thresholds must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", values)

    def __len__(self) -> int:
        return len(self.thresholds)

    def __iter__(self):
        return iter(self.thresholds)


@dataclass(frozen=True)
class MatchDecision:
    accept: bool
    score: Optional[float]
    threshold: float
    reason: DecisionReason

    def __bool__(self) -> bool:
        return self.accept


@dataclass(frozen=True)
class IdentificationResult:
    """``identifier`` is None for a no-match outcome."""

    identifier: Optional[bytes]
    best_score: Optional[float]
    margin: float
    best_candidate: Optional[bytes] = None

    @property
    def identified(self) -> bool:
        return self.identifier is not None


class RocPoint(NamedTuple):
    threshold: float
    fmr: float
    fnmr: float


class GalleryRates(NamedTuple):
    fmr_n: float
    fnmr_n: float
    valid: bool


def decide(score: float, t: float, orientation: Orientation) -> MatchDecision:
    """Accept iff score <= t for distances, score >= t for similarities."""
    if not (math.isfinite(score) and math.isfinite(t)):
        raise NonFiniteInput("score and threshold must be finite")
    if Orientation(orientation) == Orientation.DISTANCE:
        accept = score <= t
    else:
        accept = score >= t
    return MatchDecision(
        accept=bool(accept),
        score=float(score),
        threshold=float(t),
        reason=DecisionReason.MATCH if accept else DecisionReason.NO_MATCH,
    )


def _better(candidate: float, best: float, orientation: Orientation) -> bool:
    if orientation == Orientation.DISTANCE:
        return candidate < best
    return candidate > best


def identify(
    gallery: Union[Gallery, Sequence[TemplateRecord]],
    probe: MetricPoint,
    t: float,
    space: SpaceDescriptor,
) -> IdentificationResult:
    """
    Linear scan for the best-scoring template.

    Records are visited in identifier order and only a strictly better score
    replaces the incumbent, so ties go to the smallest identifier. ``margin``
    is the gap to the runner-up score (infinite with fewer than two records).
    """
    if isinstance(gallery, Gallery):
        if gallery.space != space:
            raise SpaceMismatch(f"gallery space {gallery.space} differs from {space}")
        records = gallery.records()
    else:
        records = sorted(gallery, key=lambda record: record.identifier)
    space.conform(probe)
    orientation = space.orientation

    best_id: Optional[bytes] = None
    best: Optional[float] = None
    runner_up: Optional[float] = None
    for record in records:
        score = compare(space, probe, record.embedding)
        if best is None or _better(score, best, orientation):
            runner_up = best
            best, best_id = score, record.identifier
        elif runner_up is None or _better(score, runner_up, orientation):
            runner_up = score

    if best is None:
        return IdentificationResult(identifier=None, best_score=None, margin=math.inf)
    margin = math.inf if runner_up is None else abs(best - runner_up)
    accepted = decide(best, t, orientation).accept
    logger.debug("identify over %d records: best %r (%s)", len(records), best, "match" if accepted else "no match")
    return IdentificationResult(
        identifier=best_id if accepted else None,
        best_score=best,
        margin=margin,
        best_candidate=best_id,
    )


def _similarity(scores: Union[ScoreSet, Sequence[float]]) -> np.ndarray:
    if isinstance(scores, ScoreSet):
        values = scores.similarity_values()
    else:
        values = np.asarray(scores, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("scores must be finite")
    if values.size == 0:
        raise EmptyScoreSet("rate computation needs at least one score")
    return np.sort(values)


def _similarity_thresholds(scores, thresholds: np.ndarray) -> np.ndarray:
    if isinstance(scores, ScoreSet) and scores.orientation == Orientation.DISTANCE:
        return -thresholds
    return thresholds


def _counts_above(scores, thresholds: Sequence[float]) -> Tuple[np.ndarray, int]:
    """Number of scores strictly above each threshold, and the set size."""
    ordered = _similarity(scores)
    t = _similarity_thresholds(scores, np.asarray(thresholds, dtype=np.float64))
    below_or_at = np.searchsorted(ordered, t, side="right")
    return ordered.size - below_or_at, ordered.size


def fmr(scores: Union[ScoreSet, Sequence[float]], t: float) -> float:
    """
    Fraction of ``scores`` that falsely match at ``t`` (strictly above it).

    Distance sets and ``t`` are negated first, so a distance counts only when
    strictly below ``t``. At exactly ``t`` ``decide`` accepts (d <= t) while
    this rate does not count the score.
    """
    above, n = _counts_above(scores, [t])
    return float(above[0]) / n


def fnmr(scores: Union[ScoreSet, Sequence[float]], t: float) -> float:
    """Fraction of ``scores`` at or below ``t`` (at or above it for distances)."""
    above, n = _counts_above(scores, [t])
    return float(n - above[0]) / n


def _as_grid(grid: Union[ThresholdGrid, Sequence[float]]) -> ThresholdGrid:
    return grid if isinstance(grid, ThresholdGrid) else ThresholdGrid(tuple(grid))


def roc_curve(
    genuine: Union[ScoreSet, Sequence[float]],
    impostor: Union[ScoreSet, Sequence[float]],
    grid: Union[ThresholdGrid, Sequence[float]],
) -> List[RocPoint]:
    thresholds = _as_grid(grid).thresholds
    imp_above, imp_n = _counts_above(impostor, thresholds)
    gen_above, gen_n = _counts_above(genuine, thresholds)
    return [
        RocPoint(t, float(fa) / imp_n, float(gen_n - ga) / gen_n)
        for t, fa, ga in zip(thresholds, imp_above, gen_above)
    ]


def eer(
    genuine: Union[ScoreSet, Sequence[float]],
    impostor: Union[ScoreSet, Sequence[float]],
    grid: Union[ThresholdGrid, Sequence[float]],
) -> Tuple[float, float]:
    """
    Equal error rate over ``grid``: the threshold minimising |FMR - FNMR|
    (first, i.e. smallest, on ties) and the mean of the two rates there.
    """
    rows = roc_curve(genuine, impostor, grid)
    gaps = np.array([abs(row.fmr - row.fnmr) for row in rows])
    best = rows[int(np.argmin(gaps))]
    return (best.fmr + best.fnmr) / 2.0, best.threshold


def midpoint_grid(*score_sets: Union[ScoreSet, Sequence[float]], margin: float = 1.0) -> ThresholdGrid:
    """
    Midpoints between adjacent distinct pooled scores, plus one threshold
    ``margin`` below the minimum and one above the maximum. For scores too
    large for ``margin`` to register, the end points are the neighbouring
    floats instead.
    """
    pooled = []
    for scores in score_sets:
        values = scores.values if isinstance(scores, ScoreSet) else np.asarray(scores, dtype=np.float64)
        pooled.append(values.reshape(-1))
    distinct = np.unique(np.concatenate(pooled)) if pooled else np.empty(0)
    if distinct.size == 0:
        raise EmptyScoreSet("grid construction needs at least one score")
    middles = (distinct[:-1] + distinct[1:]) / 2.0
    # adjacent floats can share a midpoint with one of their ends
    middles = middles[(middles > distinct[:-1]) & (middles < distinct[1:])]
    low = min(distinct[0] - margin, np.nextafter(distinct[0], -np.inf))
    high = max(distinct[-1] + margin, np.nextafter(distinct[-1], np.inf))
    return ThresholdGrid(tuple([low, *middles, high]))


def write_roc_csv(rows: Sequence[RocPoint], destination: Union[str, Path]) -> None:
    lines = [ROC_HEADER]
    lines.extend(f"{row.threshold:.17g},{row.fmr:.17g},{row.fnmr:.17g}" for row in rows)
    Path(destination).write_text("\n".join(lines) + "\n")


def read_roc_csv(source: Union[str, Path]) -> List[RocPoint]:
    lines = Path(source).read_text().splitlines()
    if not lines or lines[0].strip() != ROC_HEADER:
        raise ValueError(f"{source} is not a ROC file (expected header {ROC_HEADER!r})")
    rows = []
    for line in lines[1:]:
        if line.strip():
            t, fa, fn = (float(field) for field in line.split(","))
            rows.append(RocPoint(t, fa, fn))
    return rows


def gallery_scaled_rates(fmr1: float, fnmr1: float, n: int) -> GalleryRates:
    """
    First-order rates for an n-template gallery: FMR grows linearly in n,
    which is only trustworthy while n * fmr1 < 0.1.
    """
    for name, value in (("fmr1", fmr1), ("fnmr1", fnmr1)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    if n < 1:
        raise ValueError(f"gallery size must be positive, got {n}")
    product = n * fmr1
    return GalleryRates(min(max(product, 0.0), 1.0), fnmr1, product < SCALING_VALIDITY_LIMIT)


def simulate_gallery_false_match(fmr1: float, n: int, trials: int, seed: int, chunk: int = 1 << 20) -> float:
    """
    Monte Carlo estimate of the chance that at least one of ``n`` independent
    impostor comparisons falsely matches, each with probability ``fmr1``.
    """
    if not 0.0 <= fmr1 <= 1.0:
        raise ValueError(f"fmr1 must lie in [0, 1], got {fmr1}")
    if n < 1 or trials < 1:
        raise ValueError("gallery size and trial count must be positive")
    rng = np.random.default_rng(seed)
    rows_per_chunk = max(1, chunk // n)
    hits = 0
    done = 0
    while done < trials:
        rows = min(rows_per_chunk, trials - done)
        draws = rng.random((rows, n))
        hits += int(np.count_nonzero(np.any(draws < fmr1, axis=1)))
        done += rows
    return hits / trials
