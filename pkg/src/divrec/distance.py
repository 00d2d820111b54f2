"""Multi-criteria distance between catalog items.

Each criterion maps a pair of items into [0, 1]; the composite is the
weighted arithmetic mean, optionally passed through a monotone piecewise
linear calibration map. All arithmetic is plain Python floats so results
are reproducible bit-for-bit against a straightforward re-implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Sequence

from .errors import DivrecError

if TYPE_CHECKING:  # pragma: no cover - type-only imports, avoids module cycle
    from .catalog import GenreGraph, Item


class DistanceConfigError(DivrecError):
    """Bad criterion or calibration configuration."""


class FeatureError(DivrecError):
    """An item lacks, or has the wrong shape for, a configured feature."""


class CriterionKind(str, Enum):
    VECTOR_COSINE = "vector-cosine"
    VECTOR_EUCLIDEAN = "vector-euclidean"
    GRAPH_SHORTEST_PATH = "graph-shortest-path"
    CATEGORICAL_OVERLAP = "categorical-overlap"


#: The reserved feature key a graph criterion reads (the item's genre field).
GENRE_KEY = "genre_id"


@dataclass(frozen=True)
class CriterionSpec:
    """One distance criterion: what to read and how much it weighs."""

    id: str
    kind: CriterionKind
    weight: float
    feature_key: str

    def __post_init__(self) -> None:
        if not self.id:
            raise DistanceConfigError("criterion id must be non-empty")
        if not math.isfinite(self.weight) or self.weight < 0.0:
            raise DistanceConfigError(
                f"criterion {self.id!r}: weight must be finite and >= 0, got {self.weight!r}")
        if self.kind is CriterionKind.GRAPH_SHORTEST_PATH and self.feature_key != GENRE_KEY:
            raise DistanceConfigError(
                f"criterion {self.id!r}: graph-shortest-path reads {GENRE_KEY!r}, "
                f"got feature_key {self.feature_key!r}")


@dataclass(frozen=True)
class CalibrationMap:
    """Monotone piecewise-linear map from raw to perceived distance.

    Knots must start at (0,0), end at (1,1), with strictly increasing raw
    coordinates and nondecreasing perceived coordinates.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.knots) < 2:
            raise DistanceConfigError("calibration needs at least the (0,0) and (1,1) knots")
        raws = [r for r, _ in self.knots]
        percs = [p for _, p in self.knots]
        if self.knots[0] != (0.0, 0.0) or self.knots[-1] != (1.0, 1.0):
            raise DistanceConfigError("calibration knots must span (0,0) to (1,1)")
        for i in range(1, len(self.knots)):
            if raws[i] <= raws[i - 1]:
                raise DistanceConfigError("calibration raw coordinates must be strictly increasing")
            if percs[i] < percs[i - 1]:
                raise DistanceConfigError("calibration perceived coordinates must be nondecreasing")
        for r, p in self.knots:
            if not (0.0 <= r <= 1.0 and 0.0 <= p <= 1.0):
                raise DistanceConfigError("calibration knots must lie in the unit square")

    def apply(self, raw: float) -> float:
        """Interpolate the perceived distance for a raw distance in [0, 1]."""
        if raw <= 0.0:
            return 0.0
        if raw >= 1.0:
            return 1.0
        knots = self.knots
        for i in range(1, len(knots)):
            r1, p1 = knots[i]
            if raw <= r1:
                r0, p0 = knots[i - 1]
                return p0 + (raw - r0) * (p1 - p0) / (r1 - r0)
        return 1.0  # unreachable given the knot invariants


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    s = 0.0
    for x, y in zip(a, b):
        s += x * y
    return s


def _norm(a: Sequence[float]) -> float:
    s = 0.0
    for x in a:
        s += x * x
    return math.sqrt(s)


def cosine_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """(1 - cos) / 2: maps similarity in [-1, 1] onto distance in [0, 1].

    Equal vectors short-circuit to exactly 0 (norm rounding would otherwise
    leave ~1e-16). A single zero vector is treated as uncorrelated (distance
    0.5); two zero vectors are identical (distance 0).
    """
    if len(a) == len(b) and all(x == y for x, y in zip(a, b)):
        return 0.0
    na = _norm(a)
    nb = _norm(b)
    if na == 0.0 and nb == 0.0:
        return 0.0
    if na == 0.0 or nb == 0.0:
        return 0.5
    cos = _dot(a, b) / (na * nb)
    cos = max(-1.0, min(1.0, cos))
    return (1.0 - cos) / 2.0


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Bounded Euclidean distance: ||a-b|| / (1 + ||a-b||)."""
    s = 0.0
    for x, y in zip(a, b):
        d = x - y
        s += d * d
    n = math.sqrt(s)
    return n / (1.0 + n)


def jaccard_distance(a: frozenset, b: frozenset) -> float:
    """1 - |A∩B| / |A∪B|; two empty sets count as identical."""
    union = len(a | b)
    if union == 0:
        return 0.0
    return 1.0 - len(a & b) / union


def genre_graph_distance(g1: str, g2: str, graph: "GenreGraph") -> float:
    """Shortest-path hops between genres, normalized by the graph diameter.

    Same node is 0; nodes in different components get the maximal distance 1.
    Pairs inside a smaller component whose own diameter exceeds the reference
    diameter are capped at 1 so the range invariant holds.
    """
    if g1 == g2:
        if g1 not in graph.nodes:
            raise KeyError(f"unknown genre {g1!r}")
        return 0.0
    hops = graph.hops(g1, g2)
    if hops is None:
        return 1.0
    return min(1.0, hops / graph.diameter)


def _vector_feature(item: "Item", key: str) -> Sequence[float]:
    value = item.features.get(key)
    if value is None:
        raise FeatureError(f"item {item.id!r} is missing feature {key!r}")
    if isinstance(value, frozenset):
        raise FeatureError(f"item {item.id!r}: feature {key!r} is a tag set, expected a vector")
    return value


def _tag_feature(item: "Item", key: str) -> frozenset:
    value = item.features.get(key)
    if value is None:
        raise FeatureError(f"item {item.id!r} is missing feature {key!r}")
    if not isinstance(value, frozenset):
        raise FeatureError(f"item {item.id!r}: feature {key!r} is a vector, expected a tag set")
    return value


def _genre(item: "Item") -> str:
    if item.genre_id is None:
        raise FeatureError(f"item {item.id!r} has no genre_id but a graph criterion is configured")
    return item.genre_id


def criterion_distance(a: "Item", b: "Item", spec: CriterionSpec,
                       graph: "GenreGraph | None" = None) -> float:
    """Distance between two items under one criterion, in [0, 1]."""
    kind = spec.kind
    if kind is CriterionKind.VECTOR_COSINE:
        return cosine_distance(_vector_feature(a, spec.feature_key),
                               _vector_feature(b, spec.feature_key))
    if kind is CriterionKind.VECTOR_EUCLIDEAN:
        return euclidean_distance(_vector_feature(a, spec.feature_key),
                                  _vector_feature(b, spec.feature_key))
    if kind is CriterionKind.GRAPH_SHORTEST_PATH:
        if graph is None:
            raise DistanceConfigError(
                f"criterion {spec.id!r} needs a genre graph but none is configured")
        return genre_graph_distance(_genre(a), _genre(b), graph)
    if kind is CriterionKind.CATEGORICAL_OVERLAP:
        return jaccard_distance(_tag_feature(a, spec.feature_key),
                                _tag_feature(b, spec.feature_key))
    raise DistanceConfigError(f"unknown criterion kind {kind!r}")


def combined_distance(a: "Item", b: "Item", specs: Sequence[CriterionSpec],
                      calibration: CalibrationMap | None = None,
                      graph: "GenreGraph | None" = None) -> float:
    """Weighted mean of per-criterion distances, optionally calibrated."""
    num = 0.0
    den = 0.0
    for spec in specs:
        num += spec.weight * criterion_distance(a, b, spec, graph)
        den += spec.weight
    if den <= 0.0:
        raise DistanceConfigError("combined distance needs at least one positive weight")
    raw = num / den
    if calibration is None:
        return raw
    return calibration.apply(raw)
