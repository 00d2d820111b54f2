"""Catalog ingestion: items, genre graphs, and distance configuration.

File formats (all UTF-8, line oriented):

* Catalog: one JSON object per line with fields id, title, artist, genre_id,
  features, popularity. Unknown fields are rejected. ``features`` maps a
  feature key to either an array of numbers (a dense vector) or an array of
  strings (a tag set).
* Genre graph: ``nodeA<TAB>nodeB`` edge lines; a line with a single token
  declares an isolated node; lines starting with ``#`` are comments.
* Distance config: one JSON object with a ``criteria`` array
  (id, kind, weight, feature_key) and optional ``calibration`` knot list.

Ingestion is total: any malformed input surfaces as a ValidationFailure whose
report lists every violation with a stable error code and line number, and a
partially valid stream never yields a partial catalog.
"""

from __future__ import annotations

import collections
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Union

from .distance import CalibrationMap, CriterionKind, CriterionSpec, DistanceConfigError, GENRE_KEY
from .errors import DivrecError, ValidationFailure, ValidationReport

Source = Union[bytes, str, Path, IO[bytes], IO[str]]

FeatureValue = Union[tuple, frozenset]

_ITEM_FIELDS = {"id", "title", "artist", "genre_id", "features", "popularity"}


class GraphError(DivrecError):
    """Structural genre-graph violation (self loop, unknown node)."""


@dataclass(frozen=True)
class Item:
    """One recommendable entity with its per-criterion features.

    ``popularity`` is a prior play/citation count carried for reporting only;
    it must never enter any score.
    """

    id: str
    title: str
    artist: str = ""
    genre_id: str | None = None
    features: dict = field(default_factory=dict)
    popularity: int = 0


class GenreGraph:
    """Undirected genre proximity graph with precomputed hop distances.

    The diameter is the maximum eccentricity over the largest connected
    component (ties broken toward the component containing the smallest
    node id), computed once at construction.
    """

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]]):
        self.nodes: frozenset[str] = frozenset(nodes)
        adjacency: dict[str, set[str]] = {n: set() for n in self.nodes}
        canon: set[tuple[str, str]] = set()
        for a, b in edges:
            if a == b:
                raise GraphError(f"self-loop on node {a!r}")
            if a not in adjacency:
                raise GraphError(f"edge references unknown node {a!r}")
            if b not in adjacency:
                raise GraphError(f"edge references unknown node {b!r}")
            adjacency[a].add(b)
            adjacency[b].add(a)
            canon.add((min(a, b), max(a, b)))
        self.edges: frozenset[tuple[str, str]] = frozenset(canon)
        self._adjacency = {n: frozenset(s) for n, s in adjacency.items()}
        self._hops: dict[str, dict[str, int]] = {
            n: self._bfs(n) for n in self.nodes
        }
        self._component: dict[str, str] = {}
        for n in sorted(self.nodes):
            root = min(self._hops[n])  # smallest node id reachable, incl. self
            self._component[n] = root
        self.diameter: int = self._compute_diameter()

    def _bfs(self, start: str) -> dict[str, int]:
        dist = {start: 0}
        queue = collections.deque([start])
        while queue:
            node = queue.popleft()
            for nb in self._adjacency[node]:
                if nb not in dist:
                    dist[nb] = dist[node] + 1
                    queue.append(nb)
        return dist

    def _compute_diameter(self) -> int:
        if not self.nodes:
            return 0
        members: dict[str, list[str]] = collections.defaultdict(list)
        for node, root in self._component.items():
            members[root].append(node)
        largest = max(members.values(), key=lambda ns: (len(ns), min(ns)))
        ecc = 0
        for n in largest:
            ecc = max(ecc, max(self._hops[n].values()))
        return ecc

    def hops(self, g1: str, g2: str) -> int | None:
        """Shortest-path hop count, or None when the pair is disconnected."""
        try:
            per_node = self._hops[g1]
        except KeyError:
            raise KeyError(f"unknown genre {g1!r}") from None
        if g2 not in self.nodes:
            raise KeyError(f"unknown genre {g2!r}")
        return per_node.get(g2)

    def __contains__(self, node: str) -> bool:
        return node in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Catalog:
    """Validated, immutable bundle of items plus distance configuration."""

    items: dict  # id -> Item, insertion ordered
    criteria: tuple[CriterionSpec, ...] = ()
    genre_graph: GenreGraph | None = None
    calibration: CalibrationMap | None = None

    def __len__(self) -> int:
        return len(self.items)

    def item(self, item_id: str) -> Item:
        try:
            return self.items[item_id]
        except KeyError:
            raise KeyError(f"unknown item {item_id!r}") from None

    def ids(self) -> list[str]:
        return list(self.items)


def _byte_lines(source: Source) -> Iterator[bytes]:
    # Path objects name files; str/bytes are the data itself.
    if isinstance(source, Path):
        with open(source, "rb") as fh:
            yield from fh.read().splitlines()
        return
    if isinstance(source, str):
        yield from source.encode("utf-8").splitlines()
        return
    if isinstance(source, bytes):
        yield from source.splitlines()
        return
    data = source.read()
    if isinstance(data, str):
        data = data.encode("utf-8")
    yield from data.splitlines()


def _decode_json_line(raw: bytes, lineno: int, report: ValidationReport) -> dict | None:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        report.add("bad-encoding", f"invalid UTF-8: {exc.reason}", line=lineno)
        return None
    try:
        record = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        report.add("bad-json", f"unparseable record: {exc}", line=lineno)
        return None
    if not isinstance(record, dict):
        report.add("bad-record", f"expected an object, got {type(record).__name__}", line=lineno)
        return None
    return record


def _parse_feature(key: str, value, lineno: int, item_id: str,
                   report: ValidationReport) -> FeatureValue | None:
    if not isinstance(value, list):
        report.add("bad-feature", f"feature {key!r} must be an array",
                   line=lineno, item_id=item_id)
        return None
    if value and all(isinstance(v, str) for v in value):
        return frozenset(value)
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        for v in value:
            if not math.isfinite(v):
                report.add("non-finite", f"feature {key!r} has a non-finite entry",
                           line=lineno, item_id=item_id)
                return None
        if not value:
            return frozenset()  # empty array reads as an empty tag set
        return tuple(float(v) for v in value)
    report.add("bad-feature", f"feature {key!r} mixes numbers and strings",
               line=lineno, item_id=item_id)
    return None


def _parse_item(record: dict, lineno: int, report: ValidationReport) -> Item | None:
    unknown = set(record) - _ITEM_FIELDS
    if unknown:
        report.add("unknown-field", f"unknown fields: {sorted(unknown)}", line=lineno,
                   item_id=record.get("id") if isinstance(record.get("id"), str) else None)
        return None
    item_id = record.get("id")
    if not isinstance(item_id, str) or not item_id:
        report.add("missing-field", "id must be a non-empty string", line=lineno)
        return None
    title = record.get("title")
    if not isinstance(title, str):
        report.add("missing-field", "title must be a string", line=lineno, item_id=item_id)
        return None
    artist = record.get("artist", "")
    if not isinstance(artist, str):
        report.add("bad-type", "artist must be a string", line=lineno, item_id=item_id)
        return None
    genre_id = record.get("genre_id")
    if genre_id is not None and (not isinstance(genre_id, str) or not genre_id):
        report.add("bad-type", "genre_id must be a non-empty string", line=lineno, item_id=item_id)
        return None
    popularity = record.get("popularity", 0)
    if isinstance(popularity, bool) or not isinstance(popularity, int) or popularity < 0:
        report.add("bad-type", "popularity must be a nonnegative integer",
                   line=lineno, item_id=item_id)
        return None
    raw_features = record.get("features", {})
    if not isinstance(raw_features, dict):
        report.add("bad-type", "features must be an object", line=lineno, item_id=item_id)
        return None
    features: dict = {}
    ok = True
    for key, value in raw_features.items():
        parsed = _parse_feature(key, value, lineno, item_id, report)
        if parsed is None:
            ok = False
        else:
            features[key] = parsed
    if not ok:
        return None
    return Item(id=item_id, title=title, artist=artist, genre_id=genre_id,
                features=features, popularity=popularity)


def _check_cross_item(items: dict, criteria: tuple[CriterionSpec, ...],
                      graph: GenreGraph | None, report: ValidationReport) -> None:
    dims: dict[str, int] = {}
    dim_owner: dict[str, str] = {}
    for item in items.values():
        for key, value in item.features.items():
            if isinstance(value, tuple):
                if key in dims and dims[key] != len(value):
                    report.add(
                        "dimension-mismatch",
                        f"feature {key!r} has dimension {len(value)} but "
                        f"{dims[key]} on item {dim_owner[key]!r}",
                        item_id=item.id)
                else:
                    dims.setdefault(key, len(value))
                    dim_owner.setdefault(key, item.id)
    graph_needed = any(c.kind is CriterionKind.GRAPH_SHORTEST_PATH for c in criteria)
    if graph_needed and graph is None:
        report.add("bad-criterion", "a graph-shortest-path criterion is configured "
                                    "but no genre graph was supplied")
    for item in items.values():
        for spec in criteria:
            if spec.kind is CriterionKind.GRAPH_SHORTEST_PATH:
                if item.genre_id is None:
                    report.add("unknown-genre", "item has no genre_id but a graph "
                                                "criterion is configured", item_id=item.id)
                elif graph is not None and item.genre_id not in graph:
                    report.add("unknown-genre",
                               f"genre {item.genre_id!r} not in the genre graph",
                               item_id=item.id)
                continue
            value = item.features.get(spec.feature_key)
            if value is None:
                report.add("missing-feature",
                           f"feature {spec.feature_key!r} (criterion {spec.id!r}) missing",
                           item_id=item.id)
            elif spec.kind is CriterionKind.CATEGORICAL_OVERLAP:
                if not isinstance(value, frozenset):
                    report.add("feature-type",
                               f"criterion {spec.id!r} needs a tag set at "
                               f"{spec.feature_key!r}", item_id=item.id)
            elif not isinstance(value, tuple):
                report.add("feature-type",
                           f"criterion {spec.id!r} needs a vector at "
                           f"{spec.feature_key!r}", item_id=item.id)


def load_catalog(source: Source, criteria: Iterable[CriterionSpec] = (),
                 genre_graph: GenreGraph | None = None,
                 calibration: CalibrationMap | None = None) -> Catalog:
    """Parse and validate a catalog stream against its distance configuration.

    Raises ValidationFailure carrying a report of every violation; never
    returns a partially valid catalog.
    """
    report = ValidationReport()
    items: dict = {}
    saw_line = False
    for lineno, raw in enumerate(_byte_lines(source), start=1):
        if not raw.strip():
            continue
        saw_line = True
        record = _decode_json_line(raw, lineno, report)
        if record is None:
            continue
        item = _parse_item(record, lineno, report)
        if item is None:
            continue
        if item.id in items:
            report.add("duplicate-id", f"id {item.id!r} already defined", line=lineno,
                       item_id=item.id)
            continue
        items[item.id] = item
    if not saw_line:
        report.add("empty-catalog", "empty catalog")
    criteria = tuple(criteria)
    _check_cross_item(items, criteria, genre_graph, report)
    if not report.ok:
        raise ValidationFailure(report)
    return Catalog(items=items, criteria=criteria, genre_graph=genre_graph,
                   calibration=calibration)


def dump_catalog(catalog: Catalog) -> str:
    """Serialize items back to the line-delimited catalog format."""
    out = io.StringIO()
    for item in catalog.items.values():
        features = {
            key: (sorted(value) if isinstance(value, frozenset) else list(value))
            for key, value in item.features.items()
        }
        record = {"id": item.id, "title": item.title, "artist": item.artist,
                  "genre_id": item.genre_id, "features": features,
                  "popularity": item.popularity}
        if item.genre_id is None:
            del record["genre_id"]
        out.write(json.dumps(record, ensure_ascii=False) + "\n")
    return out.getvalue()


def load_genre_graph(source: Source) -> GenreGraph:
    """Parse a tab-separated edge list; single-token lines declare isolated nodes."""
    report = ValidationReport()
    nodes: set[str] = set()
    edges: list[tuple[str, str]] = []
    saw_line = False
    for lineno, raw in enumerate(_byte_lines(source), start=1):
        if not raw.strip():
            continue
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            report.add("bad-encoding", f"invalid UTF-8: {exc.reason}", line=lineno)
            continue
        if text.lstrip().startswith("#"):
            continue
        saw_line = True
        tokens = [t for t in text.strip().split("\t") if t]
        if len(tokens) == 1:
            nodes.add(tokens[0])
        elif len(tokens) == 2:
            a, b = tokens
            if a == b:
                report.add("bad-graph", f"self-loop on {a!r}", line=lineno)
                continue
            nodes.add(a)
            nodes.add(b)
            edges.append((a, b))
        else:
            report.add("bad-graph", f"expected 1 or 2 tab-separated tokens, got {len(tokens)}",
                       line=lineno)
    if not saw_line:
        report.add("bad-graph", "empty genre graph")
    if not report.ok:
        raise ValidationFailure(report)
    return GenreGraph(nodes, edges)


def dump_genre_graph(graph: GenreGraph) -> str:
    """Serialize a graph back to the edge-list format (isolated nodes as single lines)."""
    lines = []
    linked = set()
    for a, b in sorted(graph.edges):
        linked.add(a)
        linked.add(b)
        lines.append(f"{a}\t{b}")
    for node in sorted(graph.nodes - linked):
        lines.append(node)
    return "\n".join(lines) + ("\n" if lines else "")


def load_distance_config(source: Source) -> tuple[tuple[CriterionSpec, ...], CalibrationMap | None]:
    """Parse the criteria + optional calibration JSON document."""
    report = ValidationReport()
    try:
        data = b"\n".join(_byte_lines(source))
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        report.add("bad-json", f"unparseable distance config: {exc}")
        raise ValidationFailure(report) from None
    if not isinstance(doc, dict):
        report.add("bad-record", "distance config must be an object")
        raise ValidationFailure(report)
    raw_criteria = doc.get("criteria")
    if not isinstance(raw_criteria, list) or not raw_criteria:
        report.add("bad-criterion", "distance config needs a non-empty criteria array")
        raise ValidationFailure(report)
    specs: list[CriterionSpec] = []
    for i, entry in enumerate(raw_criteria):
        if not isinstance(entry, dict):
            report.add("bad-criterion", f"criteria[{i}] must be an object")
            continue
        try:
            kind = CriterionKind(entry.get("kind"))
            spec = CriterionSpec(id=str(entry.get("id", "")), kind=kind,
                                 weight=float(entry.get("weight", 0.0)),
                                 feature_key=str(entry.get("feature_key", "")))
        except (ValueError, TypeError, DistanceConfigError) as exc:
            report.add("bad-criterion", f"criteria[{i}]: {exc}")
            continue
        specs.append(spec)
    if specs and not any(s.weight > 0 for s in specs):
        report.add("all-zero-weights", "at least one criterion weight must be positive")
    calibration = None
    raw_cal = doc.get("calibration")
    if raw_cal is not None:
        try:
            knots = tuple((float(r), float(p)) for r, p in raw_cal)
            calibration = CalibrationMap(knots=knots)
        except (TypeError, ValueError, DistanceConfigError) as exc:
            report.add("bad-calibration", f"invalid calibration knots: {exc}")
    unknown = set(doc) - {"criteria", "calibration"}
    if unknown:
        report.add("unknown-field", f"unknown fields: {sorted(unknown)}")
    if not report.ok:
        raise ValidationFailure(report)
    return tuple(specs), calibration
