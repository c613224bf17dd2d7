"""Typed schema of the biological knowledge graph.

Seven node kinds and seven edge kinds form the whole vocabulary; every
edge kind constrains which node kinds it may connect.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum


class NodeKind(str, Enum):
    MARKER = "Marker"
    FEATURE_FUNCTION = "FeatureFunction"
    CELL_NAME = "CellName"
    BROAD_CELL_TYPE = "BroadCellType"
    TISSUE = "Tissue"
    CANCER_TYPE = "CancerType"
    CELL_CLASS = "CellClass"


class EdgeKind(str, Enum):
    MARK = "MARK"
    HAS_FEATURE_FUNCTION = "HAS_FEATURE_FUNCTION"
    EXPRESSES = "EXPRESSES"
    IS_A = "IS_A"
    SUGGESTS_BROAD_TYPE = "SUGGESTS_BROAD_TYPE"
    LOCATED_IN = "LOCATED_IN"
    IN_CONTEXT = "IN_CONTEXT"


# Permitted (source kind, destination kinds) per edge kind. IN_CONTEXT is
# the one kind with two legal destinations.
EDGE_ENDPOINTS: dict[EdgeKind, tuple[NodeKind, frozenset[NodeKind]]] = {
    EdgeKind.MARK: (NodeKind.MARKER, frozenset({NodeKind.FEATURE_FUNCTION})),
    EdgeKind.HAS_FEATURE_FUNCTION: (NodeKind.CELL_NAME, frozenset({NodeKind.FEATURE_FUNCTION})),
    EdgeKind.EXPRESSES: (NodeKind.CELL_NAME, frozenset({NodeKind.MARKER})),
    EdgeKind.IS_A: (NodeKind.CELL_NAME, frozenset({NodeKind.BROAD_CELL_TYPE})),
    EdgeKind.SUGGESTS_BROAD_TYPE: (NodeKind.MARKER, frozenset({NodeKind.BROAD_CELL_TYPE})),
    EdgeKind.LOCATED_IN: (NodeKind.CELL_NAME, frozenset({NodeKind.TISSUE})),
    EdgeKind.IN_CONTEXT: (NodeKind.CELL_NAME, frozenset({NodeKind.CANCER_TYPE, NodeKind.CELL_CLASS})),
}

_WHITESPACE = re.compile(r"\s+")


def canonical_name(name: str) -> str:
    """Collapse a display name to its identity form.

    Trim, collapse internal whitespace runs to single spaces, case-fold.
    (kind, canonical_name) is the graph-wide uniqueness key.
    """
    return _WHITESPACE.sub(" ", name.strip()).casefold()


@dataclass(eq=False)
class Node:
    """Identity (eq/hash) is the object itself; ids are unique per graph."""

    id: int
    kind: NodeKind
    name: str
    properties: dict[str, str] = field(default_factory=dict)

    @property
    def canonical(self) -> str:
        return canonical_name(self.name)


@dataclass(frozen=True)
class Edge:
    src: int
    kind: EdgeKind
    dst: int


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    nodes_by_kind: dict[NodeKind, int]
    edges_by_kind: dict[EdgeKind, int]

    def as_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "nodes_by_kind": {k.value: v for k, v in self.nodes_by_kind.items()},
            "edges_by_kind": {k.value: v for k, v in self.edges_by_kind.items()},
        }
