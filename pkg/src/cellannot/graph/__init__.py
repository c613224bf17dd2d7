"""Typed in-memory property graph for curated marker/cell knowledge."""

from .model import EDGE_ENDPOINTS, Edge, EdgeKind, GraphStats, Node, NodeKind, canonical_name
from .query import (
    NO_ANSWER_SENTENCE,
    MarkerAssociationTable,
    TissueScope,
    UnparsableLine,
    normalize_symbol,
)
from .snapshot import dumps, load_snapshot, loads, snapshot
from .store import KnowledgeGraph

__all__ = [
    "EDGE_ENDPOINTS",
    "Edge",
    "EdgeKind",
    "GraphStats",
    "KnowledgeGraph",
    "MarkerAssociationTable",
    "NO_ANSWER_SENTENCE",
    "Node",
    "NodeKind",
    "TissueScope",
    "UnparsableLine",
    "canonical_name",
    "dumps",
    "load_snapshot",
    "loads",
    "normalize_symbol",
    "snapshot",
]
