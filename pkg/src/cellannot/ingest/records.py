"""Record types flowing through the ingestion pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

REQUIRED_COLUMNS = (
    "tissue_class",
    "tissue_type",
    "cancer_type",
    "cell_type",
    "cell_name",
    "marker",
    "symbol",
)

ASSOCIATION_COLUMNS = (
    "cell_name",
    "broad_cell_type",
    "feature_function",
    "marker_symbol",
    "tissue_type",
    "tissue_class",
    "cancer_type",
    "cell_class",
)


@dataclass(frozen=True)
class RawRecord:
    """One data row of the source marker database CSV."""

    row_no: int
    tissue_class: str
    tissue_type: str
    cancer_type: str
    cell_type: str  # Normal/Cancer class of the cell
    cell_name: str
    marker: str
    symbol: str
    extras: tuple[tuple[str, str], ...] = ()


class PartitionKey(NamedTuple):
    tissue_class: str
    cell_name: str
    cell_type: str
    cancer_type: str
    tissue_type: str

    def tag(self) -> str:
        """Stable label used for chat tracing and response scripts."""
        return "extract:" + "/".join(self)


@dataclass
class CellTypePartition:
    """All raw rows sharing one full partition key."""

    key: PartitionKey
    records: list[RawRecord] = field(default_factory=list)

    def marker_symbols(self) -> list[str]:
        """Deduplicated marker/symbol list, first surface form kept."""
        seen: set[str] = set()
        out: list[str] = []
        for record in self.records:
            for value in (record.marker, record.symbol):
                value = value.strip()
                if not value:
                    continue
                folded = value.casefold()
                if folded not in seen:
                    seen.add(folded)
                    out.append(value)
        return out


@dataclass(frozen=True)
class ExtractionFragment:
    """One parsed row of an extraction response block."""

    feature_function: str
    broad_cell_type: str
    marker_symbol: str


@dataclass(frozen=True)
class ParseWarning:
    row_no: int
    content: str
    reason: str


@dataclass(frozen=True)
class EnhancedRecord:
    """A feature-marker association row after extraction and merge."""

    cell_name: str
    broad_cell_type: str
    feature_function: str
    marker_symbol: str
    tissue_type: str
    tissue_class: str
    cancer_type: str
    cell_class: str
    source_partition: PartitionKey

    def as_row(self) -> list[str]:
        return [
            self.cell_name,
            self.broad_cell_type,
            self.feature_function,
            self.marker_symbol,
            self.tissue_type,
            self.tissue_class,
            self.cancer_type,
            self.cell_class,
        ]
