"""In-memory typed property graph with the association query engine.

Construction is single-writer; after :meth:`KnowledgeGraph.finalize` the
graph is immutable and safe for unlimited concurrent reads.
"""
from __future__ import annotations

from typing import Iterable, Literal

from ..errors import (
    EmptyMarkerList,
    EmptyName,
    GraphFinalized,
    KindMismatch,
    UnknownNode,
    UnknownTissue,
)
from .model import EDGE_ENDPOINTS, Edge, EdgeKind, GraphStats, Node, NodeKind, canonical_name
from .query import MarkerAssociationTable, TissueScope, entity_sort_key, normalize_symbol


class KnowledgeGraph:
    """Typed property graph over the seven biological node kinds."""

    def __init__(self) -> None:
        self._nodes: dict[int, Node] = {}
        self._by_key: dict[tuple[NodeKind, str], int] = {}
        self._edges: set[Edge] = set()
        self._out: dict[int, dict[EdgeKind, set[int]]] = {}
        self._in: dict[int, dict[EdgeKind, set[int]]] = {}
        self._next_id = 1
        self._finalized = False

    # --- construction -----------------------------------------------------

    def upsert_node(self, kind: NodeKind, name: str, properties: dict[str, str] | None = None) -> int:
        """Insert or find the node with this (kind, canonical name).

        On an existing node, properties are merged with existing values
        winning on conflict. Returns the node id either way.
        """
        self._check_mutable()
        canon = canonical_name(name)
        if not canon:
            raise EmptyName(f"node name is blank for kind {kind.value}")
        key = (kind, canon)
        node_id = self._by_key.get(key)
        if node_id is not None:
            if properties:
                node = self._nodes[node_id]
                for prop_key, value in properties.items():
                    node.properties.setdefault(prop_key, value)
            return node_id
        node_id = self._next_id
        self._next_id += 1
        self._nodes[node_id] = Node(id=node_id, kind=kind, name=name.strip(), properties=dict(properties or {}))
        self._by_key[key] = node_id
        return node_id

    def add_edge(self, src: int, kind: EdgeKind, dst: int) -> Edge:
        """Add one typed edge; idempotent on (src, kind, dst)."""
        self._check_mutable()
        src_node = self._nodes.get(src)
        dst_node = self._nodes.get(dst)
        if src_node is None:
            raise UnknownNode(f"unknown source node id {src}")
        if dst_node is None:
            raise UnknownNode(f"unknown destination node id {dst}")
        allowed_src, allowed_dst = EDGE_ENDPOINTS[kind]
        if src_node.kind is not allowed_src or dst_node.kind not in allowed_dst:
            raise KindMismatch(
                f"{kind.value} cannot connect {src_node.kind.value} -> {dst_node.kind.value}"
            )
        edge = Edge(src=src, kind=kind, dst=dst)
        if edge not in self._edges:
            self._edges.add(edge)
            self._out.setdefault(src, {}).setdefault(kind, set()).add(dst)
            self._in.setdefault(dst, {}).setdefault(kind, set()).add(src)
        return edge

    def finalize(self) -> "KnowledgeGraph":
        """Freeze the graph; further mutation raises GraphFinalized."""
        self._finalized = True
        return self

    def _check_mutable(self) -> None:
        if self._finalized:
            raise GraphFinalized("graph is finalized; build a new graph instead")

    # --- lookups ------------------------------------------------------------

    @property
    def finalized(self) -> bool:
        return self._finalized

    def node(self, node_id: int) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node id {node_id}") from None

    def find(self, kind: NodeKind, name: str) -> Node | None:
        node_id = self._by_key.get((kind, canonical_name(name)))
        return self._nodes[node_id] if node_id is not None else None

    def nodes(self) -> Iterable[Node]:
        return self._nodes.values()

    def edges(self) -> Iterable[Edge]:
        return self._edges

    def neighbors(
        self, node_id: int, kind: EdgeKind, direction: Literal["outgoing", "incoming"] = "outgoing"
    ) -> set[Node]:
        """Nodes one edge of ``kind`` away in the given direction."""
        if node_id not in self._nodes:
            raise UnknownNode(f"unknown node id {node_id}")
        index = self._out if direction == "outgoing" else self._in
        ids = index.get(node_id, {}).get(kind, set())
        return {self._nodes[i] for i in ids}

    def stats(self) -> GraphStats:
        nodes_by_kind = {kind: 0 for kind in NodeKind}
        for node in self._nodes.values():
            nodes_by_kind[node.kind] += 1
        edges_by_kind = {kind: 0 for kind in EdgeKind}
        for edge in self._edges:
            edges_by_kind[edge.kind] += 1
        return GraphStats(
            node_count=len(self._nodes),
            edge_count=len(self._edges),
            nodes_by_kind=nodes_by_kind,
            edges_by_kind=edges_by_kind,
        )

    # --- association queries -------------------------------------------------

    def tissue_names(self) -> list[str]:
        """Display names of all Tissue nodes, sorted."""
        names = [n.name for n in self._nodes.values() if n.kind is NodeKind.TISSUE]
        return sorted(names, key=entity_sort_key)

    def query_associations(
        self,
        markers: list[str],
        scope: TissueScope,
        target: NodeKind,
    ) -> MarkerAssociationTable:
        """Resolve each marker to its target entities over the dual paths.

        Target BroadCellType unions the direct SUGGESTS_BROAD_TYPE edge with
        the Marker <-EXPRESSES- CellName -IS_A-> path; FeatureFunction unions
        MARK with the CellName -HAS_FEATURE_FUNCTION-> path. Under a tissue
        scope, any path through a CellName requires that cell be LOCATED_IN
        an in-scope tissue, and direct marker edges count only when the
        marker is expressed by at least one in-scope cell.
        """
        if not markers:
            raise EmptyMarkerList("query_associations requires at least one marker")
        if target is NodeKind.BROAD_CELL_TYPE:
            direct_kind, via_kind = EdgeKind.SUGGESTS_BROAD_TYPE, EdgeKind.IS_A
        elif target is NodeKind.FEATURE_FUNCTION:
            direct_kind, via_kind = EdgeKind.MARK, EdgeKind.HAS_FEATURE_FUNCTION
        else:
            raise ValueError(f"unsupported query target: {target.value}")

        in_scope_cells: set[int] | None = None
        if not scope.is_global:
            in_scope_cells = set()
            for tissue_name in sorted(scope.tissues):
                tissue = self.find(NodeKind.TISSUE, tissue_name)
                if tissue is None:
                    raise UnknownTissue(f"no Tissue node named {tissue_name!r}")
                in_scope_cells |= self._in.get(tissue.id, {}).get(EdgeKind.LOCATED_IN, set())

        rows: dict[str, tuple[str, ...]] = {}
        unresolved: list[str] = []
        for raw_symbol in markers:
            symbol = normalize_symbol(raw_symbol)
            if symbol in rows:
                continue
            entities: set[str] = set()
            marker = self.find(NodeKind.MARKER, symbol)
            if marker is not None:
                expressing_cells = self._in.get(marker.id, {}).get(EdgeKind.EXPRESSES, set())
                if in_scope_cells is not None:
                    expressing_cells = expressing_cells & in_scope_cells
                    direct_allowed = bool(expressing_cells)
                else:
                    direct_allowed = True
                if direct_allowed:
                    for dst in self._out.get(marker.id, {}).get(direct_kind, set()):
                        entities.add(self._nodes[dst].name)
                for cell_id in expressing_cells:
                    for dst in self._out.get(cell_id, {}).get(via_kind, set()):
                        entities.add(self._nodes[dst].name)
            rows[symbol] = tuple(sorted(entities, key=entity_sort_key))
            if not entities:
                unresolved.append(symbol)
        return MarkerAssociationTable(target=target, rows=rows, unresolved=unresolved)
