"""Independent brute-force oracles used to check the real implementations.

Everything here works from raw node/edge listings or first principles and
deliberately avoids the indexes and shortcuts the production code uses.
"""
from __future__ import annotations

import random

from cellannot.graph import EdgeKind, KnowledgeGraph, NodeKind, canonical_name, normalize_symbol


def brute_force_associations(
    graph: KnowledgeGraph,
    markers: list[str],
    scope_tissues: set[str] | None,
    target: NodeKind,
) -> dict[str, set[str]]:
    """Exhaustive path enumeration over the flat edge list.

    ``scope_tissues`` of None means global. Returns entity-name sets keyed
    by uppercase-normalized marker symbol.
    """
    nodes = {n.id: n for n in graph.nodes()}
    edges = list(graph.edges())

    if target is NodeKind.BROAD_CELL_TYPE:
        direct_kind, via_kind = EdgeKind.SUGGESTS_BROAD_TYPE, EdgeKind.IS_A
    else:
        direct_kind, via_kind = EdgeKind.MARK, EdgeKind.HAS_FEATURE_FUNCTION

    in_scope_cells: set[int] | None = None
    if scope_tissues is not None:
        wanted = {canonical_name(t) for t in scope_tissues}
        tissue_ids = {
            n.id for n in nodes.values() if n.kind is NodeKind.TISSUE and n.canonical in wanted
        }
        in_scope_cells = {
            e.src for e in edges if e.kind is EdgeKind.LOCATED_IN and e.dst in tissue_ids
        }

    marker_ids = {
        n.canonical: n.id for n in nodes.values() if n.kind is NodeKind.MARKER
    }

    result: dict[str, set[str]] = {}
    for raw in markers:
        symbol = normalize_symbol(raw)
        if symbol in result:
            continue
        found: set[str] = set()
        marker_id = marker_ids.get(canonical_name(symbol))
        if marker_id is not None:
            expressing = {
                e.src for e in edges if e.kind is EdgeKind.EXPRESSES and e.dst == marker_id
            }
            if in_scope_cells is not None:
                expressing &= in_scope_cells
            direct_allowed = in_scope_cells is None or bool(expressing)
            if direct_allowed:
                for e in edges:
                    if e.kind is direct_kind and e.src == marker_id:
                        found.add(nodes[e.dst].name)
            for cell_id in expressing:
                for e in edges:
                    if e.kind is via_kind and e.src == cell_id:
                        found.add(nodes[e.dst].name)
        result[symbol] = found
    return result


def random_graph(rng: random.Random, max_nodes: int = 200) -> tuple[KnowledgeGraph, list[str]]:
    """Build a random valid typed graph plus the list of marker display names."""
    g = KnowledgeGraph()
    n_markers = rng.randint(1, 24)
    n_cells = rng.randint(1, 20)
    n_broad = rng.randint(1, 8)
    n_features = rng.randint(1, 12)
    n_tissues = rng.randint(1, 6)
    n_cancer = rng.randint(0, 3)
    n_classes = rng.randint(0, 2)

    markers = [f"GN{i}A" for i in range(n_markers)]
    marker_ids = [g.upsert_node(NodeKind.MARKER, m) for m in markers]
    cell_ids = [g.upsert_node(NodeKind.CELL_NAME, f"Cell Type {i}") for i in range(n_cells)]
    broad_ids = [g.upsert_node(NodeKind.BROAD_CELL_TYPE, f"Broad {i}") for i in range(n_broad)]
    feature_ids = [g.upsert_node(NodeKind.FEATURE_FUNCTION, f"Feature {i}+") for i in range(n_features)]
    tissue_ids = [g.upsert_node(NodeKind.TISSUE, f"Tissue {i}") for i in range(n_tissues)]
    cancer_ids = [g.upsert_node(NodeKind.CANCER_TYPE, f"Cancer {i}") for i in range(n_cancer)]
    class_ids = [g.upsert_node(NodeKind.CELL_CLASS, f"Class {i}") for i in range(n_classes)]

    def sprinkle(kind: EdgeKind, sources: list[int], targets: list[int], density: float) -> None:
        if not sources or not targets:
            return
        for src in sources:
            for dst in targets:
                if rng.random() < density:
                    g.add_edge(src, kind, dst)

    sprinkle(EdgeKind.EXPRESSES, cell_ids, marker_ids, 0.15)
    sprinkle(EdgeKind.IS_A, cell_ids, broad_ids, 0.2)
    sprinkle(EdgeKind.HAS_FEATURE_FUNCTION, cell_ids, feature_ids, 0.15)
    sprinkle(EdgeKind.SUGGESTS_BROAD_TYPE, marker_ids, broad_ids, 0.1)
    sprinkle(EdgeKind.MARK, marker_ids, feature_ids, 0.1)
    sprinkle(EdgeKind.LOCATED_IN, cell_ids, tissue_ids, 0.3)
    sprinkle(EdgeKind.IN_CONTEXT, cell_ids, cancer_ids, 0.1)
    sprinkle(EdgeKind.IN_CONTEXT, cell_ids, class_ids, 0.1)
    return g.finalize(), markers


def random_query(
    rng: random.Random, graph: KnowledgeGraph, markers: list[str]
) -> tuple[list[str], set[str] | None]:
    """Pick a random marker list (some unknown) and a random scope."""
    known = rng.sample(markers, k=rng.randint(1, min(6, len(markers))))
    unknown = [f"ZZ{i}Q" for i in range(rng.randint(0, 2))]
    query_markers = known + unknown
    rng.shuffle(query_markers)
    tissue_names = graph.tissue_names()
    if tissue_names and rng.random() < 0.5:
        scope = set(rng.sample(tissue_names, k=rng.randint(1, len(tissue_names))))
    else:
        scope = None
    return query_markers, scope


def recount_stats(graph: KnowledgeGraph) -> tuple[int, int, dict, dict]:
    """Recount nodes and edges by direct iteration."""
    nodes_by_kind: dict[NodeKind, int] = {}
    for node in graph.nodes():
        nodes_by_kind[node.kind] = nodes_by_kind.get(node.kind, 0) + 1
    edges_by_kind: dict[EdgeKind, int] = {}
    n_edges = 0
    for edge in graph.edges():
        edges_by_kind[edge.kind] = edges_by_kind.get(edge.kind, 0) + 1
        n_edges += 1
    return sum(nodes_by_kind.values()), n_edges, nodes_by_kind, edges_by_kind


def expected_graph_sets(records) -> tuple[set, set]:
    """Independent set construction for the graph built from enhanced records.

    Returns (node key set, edge key set) using (kind, canonical name) keys,
    mirroring the documented build rules but via plain set comprehension.
    """
    node_keys: set[tuple[NodeKind, str]] = set()
    edge_keys: set[tuple[EdgeKind, tuple, tuple]] = set()

    def key(kind: NodeKind, name: str):
        return (kind, canonical_name(name))

    for rec in records:
        marker = key(NodeKind.MARKER, rec.marker_symbol)
        cell = key(NodeKind.CELL_NAME, rec.cell_name)
        broad = key(NodeKind.BROAD_CELL_TYPE, rec.broad_cell_type)
        node_keys.update([marker, cell, broad])
        edge_keys.add((EdgeKind.EXPRESSES, cell, marker))
        edge_keys.add((EdgeKind.IS_A, cell, broad))
        edge_keys.add((EdgeKind.SUGGESTS_BROAD_TYPE, marker, broad))
        if rec.feature_function.strip():
            feature = key(NodeKind.FEATURE_FUNCTION, rec.feature_function)
            node_keys.add(feature)
            edge_keys.add((EdgeKind.MARK, marker, feature))
            edge_keys.add((EdgeKind.HAS_FEATURE_FUNCTION, cell, feature))
        if rec.tissue_type.strip():
            tissue = key(NodeKind.TISSUE, rec.tissue_type)
            node_keys.add(tissue)
            edge_keys.add((EdgeKind.LOCATED_IN, cell, tissue))
        if rec.cancer_type.strip():
            cancer = key(NodeKind.CANCER_TYPE, rec.cancer_type)
            node_keys.add(cancer)
            edge_keys.add((EdgeKind.IN_CONTEXT, cell, cancer))
        if rec.cell_class.strip():
            cell_class = key(NodeKind.CELL_CLASS, rec.cell_class)
            node_keys.add(cell_class)
            edge_keys.add((EdgeKind.IN_CONTEXT, cell, cell_class))
    return node_keys, edge_keys
