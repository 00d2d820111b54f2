"""Catalog ingestion tests: totality, coded errors, round-trips, fixtures."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divrec.catalog import (
    GenreGraph,
    GraphError,
    dump_catalog,
    dump_genre_graph,
    load_catalog,
    load_distance_config,
    load_genre_graph,
)
from divrec.errors import ValidationFailure

from .conftest import DATA, GENRE_MAP_EDGES, bfs_hops


def codes(exc_info) -> set[str]:
    return exc_info.value.report.codes()


class TestLoadCatalog:
    def test_empty_stream(self):
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(b"")
        assert codes(exc) == {"empty-catalog"}

    def test_duplicate_id_names_line(self):
        stream = "\n".join([
            json.dumps({"id": "a", "title": "A"}),
            json.dumps({"id": "b", "title": "B"}),
            json.dumps({"id": "a", "title": "A again"}),
        ])
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream)
        issue = [i for i in exc.value.report.issues if i.code == "duplicate-id"][0]
        assert issue.line == 3
        assert issue.item_id == "a"

    def test_genre_fixture_loads(self, genre_catalog, genre_map_graph):
        assert len(genre_catalog) == 7
        genres = {item.genre_id for item in genre_catalog.items.values()}
        assert genres == {"trip-hop", "acid-house", "electro-jazz", "dub",
                          "indie-soul", "classical", "hard-rock"}
        # Diameter cross-checked against the BFS oracle over every node.
        nodes = {n for e in GENRE_MAP_EDGES for n in e}
        oracle_diameter = max(max(bfs_hops(GENRE_MAP_EDGES, n).values()) for n in nodes)
        assert genre_map_graph.diameter == oracle_diameter == 8

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(json.dumps({"id": "a", "title": "A", "rating": 5}))
        assert "unknown-field" in codes(exc)

    def test_missing_title(self):
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(json.dumps({"id": "a"}))
        assert "missing-field" in codes(exc)

    def test_feature_dimension_mismatch(self):
        stream = "\n".join([
            json.dumps({"id": "a", "title": "A", "features": {"v": [1.0, 2.0]}}),
            json.dumps({"id": "b", "title": "B", "features": {"v": [1.0]}}),
        ])
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream)
        assert "dimension-mismatch" in codes(exc)

    def test_partially_valid_never_partial(self):
        stream = "\n".join([
            json.dumps({"id": "a", "title": "A"}),
            "not json at all {",
        ])
        with pytest.raises(ValidationFailure):
            load_catalog(stream)

    def test_every_violation_reported(self):
        stream = "\n".join([
            "garbage",
            json.dumps({"id": "a", "title": "A", "popularity": -3}),
            json.dumps({"id": "", "title": "B"}),
        ])
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream)
        assert len(exc.value.report.issues) == 3
        assert {i.line for i in exc.value.report.issues} == {1, 2, 3}

    def test_unresolvable_genre(self, genre_map_graph):
        criteria, _ = load_distance_config(DATA / "genre_distance.json")
        stream = json.dumps({"id": "x", "title": "X", "genre_id": "vaporwave"})
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream, criteria=criteria, genre_graph=genre_map_graph)
        assert "unknown-genre" in codes(exc)

    def test_missing_feature_for_criterion(self):
        criteria, _ = load_distance_config(json.dumps({
            "criteria": [{"id": "c", "kind": "vector-cosine", "weight": 1,
                          "feature_key": "audio"}]}))
        stream = json.dumps({"id": "x", "title": "X"})
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream, criteria=criteria)
        assert "missing-feature" in codes(exc)

    def test_non_finite_feature(self):
        stream = '{"id": "a", "title": "A", "features": {"v": [1.0, NaN]}}'
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream)
        assert "non-finite" in codes(exc)

    def test_bool_popularity_rejected(self):
        stream = json.dumps({"id": "a", "title": "A", "popularity": True})
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(stream)
        assert "bad-type" in codes(exc)

    def test_invalid_utf8(self):
        with pytest.raises(ValidationFailure) as exc:
            load_catalog(b'{"id": "\xff\xfe", "title": "A"}')
        assert "bad-encoding" in codes(exc)

    def test_roundtrip_identity(self, genre_catalog):
        dumped = dump_catalog(genre_catalog)
        again = load_catalog(dumped, criteria=genre_catalog.criteria,
                             genre_graph=genre_catalog.genre_graph)
        assert again.items == genre_catalog.items
        assert dump_catalog(again) == dumped

    def test_tag_features_roundtrip(self):
        stream = json.dumps({"id": "a", "title": "A",
                             "features": {"tags": ["rock", "blues"], "v": [0.5, 1.5]}})
        cat = load_catalog(stream)
        item = cat.item("a")
        assert item.features["tags"] == frozenset({"rock", "blues"})
        assert item.features["v"] == (0.5, 1.5)
        assert load_catalog(dump_catalog(cat)).items == cat.items


class TestLoadGenreGraph:
    def test_empty_is_error(self):
        with pytest.raises(ValidationFailure):
            load_genre_graph(b"")

    def test_path_graph_diameter(self):
        g = load_genre_graph("a\tb\nb\tc\n")
        assert g.diameter == 2

    def test_comments_and_isolated_nodes(self):
        g = load_genre_graph("# header\na\tb\nloner\n")
        assert "loner" in g
        assert g.hops("a", "loner") is None

    def test_self_loop_named_with_line(self):
        with pytest.raises(ValidationFailure) as exc:
            load_genre_graph("a\tb\nc\tc\n")
        issue = exc.value.report.issues[0]
        assert issue.code == "bad-graph" and issue.line == 2

    def test_too_many_tokens(self):
        with pytest.raises(ValidationFailure) as exc:
            load_genre_graph("a\tb\tc\n")
        assert "bad-graph" in codes(exc)

    def test_genre_map_diameter_matches_oracle(self, genre_map_graph):
        nodes = {n for e in GENRE_MAP_EDGES for n in e}
        for start in nodes:
            oracle = bfs_hops(GENRE_MAP_EDGES, start)
            for node, hops in oracle.items():
                assert genre_map_graph.hops(start, node) == hops

    def test_roundtrip(self, genre_map_graph):
        again = load_genre_graph(dump_genre_graph(genre_map_graph))
        assert again.nodes == genre_map_graph.nodes
        assert again.edges == genre_map_graph.edges
        assert again.diameter == genre_map_graph.diameter

    def test_programmatic_unknown_node_in_edge(self):
        with pytest.raises(GraphError):
            GenreGraph({"a"}, [("a", "ghost")])

    def test_programmatic_self_loop(self):
        with pytest.raises(GraphError):
            GenreGraph({"a"}, [("a", "a")])


class TestLoadDistanceConfig:
    def test_genre_config(self):
        criteria, calibration = load_distance_config(DATA / "genre_distance.json")
        assert len(criteria) == 1
        assert criteria[0].kind.value == "graph-shortest-path"
        assert calibration is None

    def test_with_calibration(self):
        doc = json.dumps({
            "criteria": [{"id": "c", "kind": "vector-cosine", "weight": 1,
                          "feature_key": "v"}],
            "calibration": [[0, 0], [0.5, 0.8], [1, 1]],
        })
        criteria, calibration = load_distance_config(doc)
        assert calibration.apply(0.25) == pytest.approx(0.4)

    def test_bad_kind(self):
        doc = json.dumps({"criteria": [{"id": "c", "kind": "psychic", "weight": 1,
                                        "feature_key": "v"}]})
        with pytest.raises(ValidationFailure) as exc:
            load_distance_config(doc)
        assert "bad-criterion" in codes(exc)

    def test_all_zero_weights(self):
        doc = json.dumps({"criteria": [
            {"id": "a", "kind": "vector-cosine", "weight": 0, "feature_key": "v"},
            {"id": "b", "kind": "vector-euclidean", "weight": 0, "feature_key": "v"},
        ]})
        with pytest.raises(ValidationFailure) as exc:
            load_distance_config(doc)
        assert "all-zero-weights" in codes(exc)


class TestIngestionTotality:
    """No byte stream may crash the loader; every failure is a coded issue."""

    @settings(max_examples=300, deadline=None)
    @given(data=st.binary(max_size=400))
    def test_arbitrary_bytes_never_crash(self, data):
        try:
            load_catalog(data)
        except ValidationFailure as exc:
            assert exc.report.issues
            assert all(i.code for i in exc.report.issues)

    @settings(max_examples=200, deadline=None)
    @given(data=st.text(max_size=300))
    def test_arbitrary_text_never_crashes(self, data):
        try:
            load_catalog(data.encode("utf-8", "surrogatepass"))
        except ValidationFailure as exc:
            assert exc.report.issues

    @settings(max_examples=200, deadline=None)
    @given(record=st.recursive(
        st.none() | st.booleans() | st.floats(allow_nan=True) | st.text(max_size=20),
        lambda children: st.lists(children, max_size=4)
        | st.dictionaries(st.text(max_size=8), children, max_size=4),
        max_leaves=12))
    def test_arbitrary_json_never_crashes(self, record):
        try:
            load_catalog(json.dumps(record))
        except ValidationFailure as exc:
            assert exc.report.issues
