from __future__ import annotations

import random

import pytest

from cellannot.errors import IoFailure, MalformedSnapshot
from cellannot.graph import (
    EdgeKind,
    KnowledgeGraph,
    NodeKind,
    dumps,
    load_snapshot,
    loads,
    snapshot,
)

from oracles import random_graph


def test_empty_graph_round_trip():
    g = KnowledgeGraph().finalize()
    loaded = loads(dumps(g))
    assert loaded.stats().node_count == 0
    assert loaded.stats().edge_count == 0


def test_fixture_round_trip_preserves_stats(cd4_graph, tmp_path):
    path = snapshot(cd4_graph, tmp_path / "fixture.snapshot")
    loaded = load_snapshot(path)
    assert loaded.stats() == cd4_graph.stats()
    assert loaded.finalized


def test_round_trip_is_byte_identical(cd4_graph):
    text = dumps(cd4_graph)
    assert dumps(loads(text)) == text


def test_dumps_is_deterministic(cd4_graph):
    assert dumps(cd4_graph) == dumps(cd4_graph)


def test_properties_and_names_survive_round_trip():
    g = KnowledgeGraph()
    tissue = g.upsert_node(NodeKind.TISSUE, "Peripheral blood", {"tissue_class": "Blood"})
    cell = g.upsert_node(NodeKind.CELL_NAME, "Weird; name = with\ttab")
    g.add_edge(cell, EdgeKind.LOCATED_IN, tissue)
    g.finalize()
    loaded = loads(dumps(g))
    found = loaded.find(NodeKind.CELL_NAME, "Weird; name = with\ttab")
    assert found is not None
    assert loaded.find(NodeKind.TISSUE, "Peripheral blood").properties == {"tissue_class": "Blood"}
    assert dumps(loaded) == dumps(g)


def test_unfinalized_graph_cannot_snapshot():
    with pytest.raises(ValueError):
        dumps(KnowledgeGraph())


def test_truncated_file_is_malformed(cd4_graph, tmp_path):
    text = dumps(cd4_graph)
    truncated = text[: int(len(text) * 0.6)]
    with pytest.raises(MalformedSnapshot):
        loads(truncated)


def test_missing_header_is_malformed():
    with pytest.raises(MalformedSnapshot):
        loads("N\tMarker\tCD4\t\n")


def test_garbage_record_is_malformed_with_line_number():
    text = "# cellannot-graph v1 nodes=0 edges=0\nX\twhat\n"
    with pytest.raises(MalformedSnapshot) as err:
        loads(text)
    assert err.value.line_no == 2


def test_edge_to_unknown_node_is_malformed():
    text = (
        "# cellannot-graph v1 nodes=1 edges=1\n"
        "N\tMarker\tCD4\t\n"
        "E\tMARK\tMarker:CD4\tFeatureFunction:CD4+\n"
    )
    with pytest.raises(MalformedSnapshot):
        loads(text)


def test_missing_file_is_io_failure(tmp_path):
    with pytest.raises(IoFailure):
        load_snapshot(tmp_path / "absent.snapshot")


def test_random_graph_round_trips_are_byte_identical():
    rng = random.Random(47)
    for _ in range(15):
        g, _ = random_graph(rng)
        text = dumps(g)
        assert dumps(loads(text)) == text
        assert loads(text).stats() == g.stats()
