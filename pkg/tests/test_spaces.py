import itertools
from functools import lru_cache

import numpy as np
import pytest

from biomatch.errors import (
    DimensionMismatch,
    LengthMismatch,
    NonFiniteInput,
    VariantMismatch,
    ZeroVector,
)
from biomatch.spaces import (
    MetricPoint,
    Orientation,
    SpaceDescriptor,
    SpaceKind,
    chebyshev_distance,
    compare,
    cosine_distance,
    cosine_similarity,
    euclidean_distance,
    hamming_distance,
    hamming_weight,
    levenshtein_distance,
    xor_bits,
)


def naive_levenshtein(s: str, t: str) -> int:
    @lru_cache(maxsize=None)
    def lev(i: int, j: int) -> int:
        if min(i, j) == 0:
            return max(i, j)
        return min(
            lev(i - 1, j) + 1,
            lev(i, j - 1) + 1,
            lev(i - 1, j - 1) + (s[i - 1] != t[j - 1]),
        )

    return lev(len(s), len(t))


@pytest.mark.parametrize(
    "x, y, expected",
    [("000", "000", 0), ("1010", "0101", 4), ("10110", "10011", 2)],
)
def test_hamming_distance(x, y, expected):
    assert hamming_distance(MetricPoint.bits(x), MetricPoint.bits(y)) == expected


def test_hamming_distance_length_mismatch():
    with pytest.raises(LengthMismatch):
        hamming_distance("101", "10")


@pytest.mark.parametrize("x, expected", [("0000", 0), ("1111", 4), ("1010", 2)])
def test_hamming_weight(x, expected):
    assert hamming_weight(MetricPoint.bits(x)) == expected


def test_hamming_distance_is_weight_of_xor():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.integers(0, 2, size=32)
        b = rng.integers(0, 2, size=32)
        assert hamming_distance(a, b) == hamming_weight(xor_bits(a, b))


@pytest.mark.parametrize(
    "x, y, expected",
    [("", "abc", 3), ("abc", "abc", 0), ("kitten", "sitting", 3)],
)
def test_levenshtein_distance(x, y, expected):
    assert levenshtein_distance(MetricPoint.symbols(x), MetricPoint.symbols(y)) == expected


def test_levenshtein_matches_naive_recursion():
    short = ["".join(chars) for n in range(4) for chars in itertools.product("abc", repeat=n)]
    for s, t in itertools.product(short, repeat=2):
        assert levenshtein_distance(s, t) == naive_levenshtein(s, t)

    rng = np.random.default_rng(11)
    for _ in range(500):
        s = "".join(rng.choice(list("abc"), size=rng.integers(0, 7)))
        t = "".join(rng.choice(list("abc"), size=rng.integers(0, 7)))
        assert levenshtein_distance(s, t) == naive_levenshtein(s, t)


def test_euclidean_distance():
    assert euclidean_distance([0, 0], [0, 0]) == 0.0
    assert euclidean_distance([0, 0], [3, 4]) == 5.0
    assert euclidean_distance([1, 1, 1], [2, 3, 4]) == pytest.approx(np.sqrt(14.0))


def test_real_vector_errors():
    with pytest.raises(DimensionMismatch):
        euclidean_distance([0, 0], [0, 0, 0])
    with pytest.raises(NonFiniteInput):
        MetricPoint.vector([0.0, float("nan")])


def test_chebyshev_distance():
    assert chebyshev_distance([1, 2], [1, 2]) == 0.0
    assert chebyshev_distance([1, 2], [4, 3]) == 3.0
    assert chebyshev_distance([0, 5, -2], [2, 1, -2]) == 4.0


def test_cosine_similarity():
    assert cosine_similarity([1, 2], [1, 2]) == pytest.approx(1.0)
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 1], [-1, -1]) == pytest.approx(-1.0)
    with pytest.raises(ZeroVector):
        cosine_similarity([0, 0], [1, 0])


def test_cosine_distance_breaks_triangle_inequality():
    x, y, z = [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]
    assert cosine_distance(x, z) > cosine_distance(x, y) + cosine_distance(y, z)


@pytest.mark.parametrize(
    "kind, dim, x, y, expected",
    [
        (SpaceKind.HAMMING, 4, MetricPoint.bits("1010"), MetricPoint.bits("0101"), 4.0),
        (SpaceKind.EUCLIDEAN, 2, MetricPoint.vector([0, 0]), MetricPoint.vector([3, 4]), 5.0),
        (SpaceKind.COSINE, 2, MetricPoint.vector([1, 0]), MetricPoint.vector([1, 0]), 1.0),
        (SpaceKind.LEVENSHTEIN, 8, MetricPoint.symbols("kitten"), MetricPoint.symbols("sitting"), 3.0),
    ],
)
def test_compare_dispatches(kind, dim, x, y, expected):
    assert compare(SpaceDescriptor(kind=kind, dimension=dim), x, y) == pytest.approx(expected)


def test_compare_variant_mismatch():
    space = SpaceDescriptor(kind=SpaceKind.HAMMING, dimension=2)
    with pytest.raises(VariantMismatch):
        compare(space, MetricPoint.vector([0.0, 1.0]), MetricPoint.bits("01"))


def test_descriptor_orientation():
    assert SpaceDescriptor(kind=SpaceKind.COSINE, dimension=3).orientation == Orientation.SIMILARITY
    assert SpaceDescriptor(kind=SpaceKind.CHEBYSHEV, dimension=3).orientation == Orientation.DISTANCE
    with pytest.raises(ValueError):
        SpaceDescriptor(kind=SpaceKind.EUCLIDEAN, dimension=3, orientation=Orientation.SIMILARITY)


def test_conform_checks_dimension():
    space = SpaceDescriptor(kind=SpaceKind.LEVENSHTEIN, dimension=3)
    assert space.conform(MetricPoint.symbols("ab")) == MetricPoint.symbols("ab")
    with pytest.raises(DimensionMismatch):
        space.conform(MetricPoint.symbols("abcd"))
    with pytest.raises(DimensionMismatch):
        SpaceDescriptor(kind=SpaceKind.HAMMING, dimension=4).conform(MetricPoint.bits("101"))


def random_bits(rng):
    return rng.integers(0, 2, size=12)


def random_string(rng):
    return "".join(rng.choice(list("abcd"), size=rng.integers(0, 7)))


def random_vector(rng):
    return rng.normal(size=5)


@pytest.mark.parametrize(
    "metric, draw",
    [
        (hamming_distance, random_bits),
        (levenshtein_distance, random_string),
        (euclidean_distance, random_vector),
        (chebyshev_distance, random_vector),
    ],
    ids=["hamming", "levenshtein", "euclidean", "chebyshev"],
)
def test_distances_are_metrics(metric, draw):
    rng = np.random.default_rng(3)
    for _ in range(1000):
        x, y, z = draw(rng), draw(rng), draw(rng)
        assert metric(x, x) == 0
        assert metric(x, y) >= 0
        assert metric(x, y) == metric(y, x)
        assert metric(x, z) <= metric(x, y) + metric(y, z) + 1e-12


def test_chebyshev_bounds_euclidean():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        x, y = rng.normal(size=(2, n)) * rng.uniform(0.1, 100.0)
        cheb, eucl = chebyshev_distance(x, y), euclidean_distance(x, y)
        assert cheb <= eucl * (1 + 1e-12)
        assert eucl <= np.sqrt(n) * cheb * (1 + 1e-12)


def test_cosine_similarity_stays_in_range():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        x, y = rng.normal(size=(2, n))
        assert -1.0 <= cosine_similarity(x, y) <= 1.0
    # parallel and antiparallel vectors sit on the bounds after rounding
    assert cosine_similarity([3.0, 3.0, 3.0], [0.1, 0.1, 0.1]) <= 1.0
    assert cosine_similarity([0.3, 0.7], [-0.3, -0.7]) >= -1.0
