"""Raw CSV loading and cell-type partitioning."""
from __future__ import annotations

import csv
from pathlib import Path

from ..errors import MalformedRow, MissingColumn
from .records import REQUIRED_COLUMNS, CellTypePartition, PartitionKey, RawRecord


def load_raw(path: str | Path) -> list[RawRecord]:
    """Read the source marker CSV into records.

    The header must contain every required column (any order, extra
    columns pass through verbatim). Blank-only rows are skipped; row
    numbers count from 1 including the header line.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise MissingColumn(column)
        extra_columns = [c for c in header if c not in REQUIRED_COLUMNS]
        records: list[RawRecord] = []
        for row_no, row in enumerate(reader, start=2):
            values = {key: (value or "").strip() for key, value in row.items() if key is not None}
            if not any(values.values()):
                continue
            cell_name = values.get("cell_name", "")
            marker = values.get("marker", "")
            symbol = values.get("symbol", "")
            if not cell_name:
                raise MalformedRow(row_no, "cell_name is empty")
            if not marker and not symbol:
                raise MalformedRow(row_no, "both marker and symbol are empty")
            records.append(
                RawRecord(
                    row_no=row_no,
                    tissue_class=values.get("tissue_class", ""),
                    tissue_type=values.get("tissue_type", ""),
                    cancer_type=values.get("cancer_type", ""),
                    cell_type=values.get("cell_type", ""),
                    cell_name=cell_name,
                    marker=marker,
                    symbol=symbol,
                    extras=tuple((c, values.get(c, "")) for c in extra_columns),
                )
            )
    return records


def partition(records: list[RawRecord]) -> list[CellTypePartition]:
    """Group records by tissue_class then the remaining key dimensions.

    Partitions come back sorted by key, so downstream processing order is
    deterministic regardless of input order.
    """
    by_key: dict[PartitionKey, CellTypePartition] = {}
    for record in records:
        key = PartitionKey(
            tissue_class=record.tissue_class,
            cell_name=record.cell_name,
            cell_type=record.cell_type,
            cancer_type=record.cancer_type,
            tissue_type=record.tissue_type,
        )
        by_key.setdefault(key, CellTypePartition(key=key)).records.append(record)
    return [by_key[key] for key in sorted(by_key)]
