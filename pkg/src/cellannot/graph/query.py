"""Scope and result types for marker association queries.

These types are shared between the graph store (which executes template
queries) and the retrieval layer (which formats and parses evidence
blocks), so they live here to keep the import graph acyclic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import NodeKind

# The one sentence emitted (and recognized) when no marker resolved.
NO_ANSWER_SENTENCE = "I don't know the answer."


def normalize_symbol(symbol: str) -> str:
    """Uppercase-normalize a gene symbol for matching and display."""
    return " ".join(symbol.split()).upper()


def entity_sort_key(name: str) -> tuple[str, str]:
    """Deterministic ordering for entity names inside a table row."""
    return (name.casefold(), name)


@dataclass(frozen=True)
class TissueScope:
    """Either the whole graph or a named set of tissues."""

    tissues: frozenset[str] = frozenset()

    @classmethod
    def global_scope(cls) -> "TissueScope":
        return cls(frozenset())

    @classmethod
    def scoped(cls, tissues) -> "TissueScope":
        names = frozenset(t for t in tissues if t.strip())
        if not names:
            raise ValueError("scoped TissueScope requires at least one tissue name")
        return cls(names)

    @property
    def is_global(self) -> bool:
        return not self.tissues

    def describe(self) -> str:
        if self.is_global:
            return "global"
        return "tissues: " + ", ".join(sorted(self.tissues))


@dataclass
class UnparsableLine:
    line_no: int
    content: str


@dataclass
class MarkerAssociationTable:
    """Per-marker retrieved entities, the evidence handed to selection tasks.

    ``rows`` maps each uppercase-normalized input symbol (in input order) to
    a deduplicated, deterministically ordered tuple of entity names.
    Markers with no hits appear in ``unresolved`` and keep an empty row.
    """

    target: NodeKind | None
    rows: dict[str, tuple[str, ...]] = field(default_factory=dict)
    unresolved: list[str] = field(default_factory=list)
    # True only for tables parsed from the bare no-answer sentence, where
    # the original marker list is unrecoverable.
    parsed_no_answer: bool = False
    notes: list[str] = field(default_factory=list, compare=False)
    warnings: list[UnparsableLine] = field(default_factory=list, compare=False)

    @property
    def all_unresolved(self) -> bool:
        if self.parsed_no_answer:
            return True
        return bool(self.rows) and len(self.unresolved) == len(self.rows)

    def entities(self) -> set[str]:
        """Union of every row's entities."""
        out: set[str] = set()
        for names in self.rows.values():
            out.update(names)
        return out
