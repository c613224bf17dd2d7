"""Extraction prompting and response parsing for one cell-type partition."""
from __future__ import annotations

import csv
import io

from ..errors import EmptyBlock, EmptyPartition, NoBlockFound
from ..gateway import extract_block
from ..graph import normalize_symbol
from ..prompt_store import load_prompt
from .records import CellTypePartition, ExtractionFragment, ParseWarning

_BLOCK_HEADER = ("feature_function", "broad_cell_type", "marker_symbol")


def build_extraction_prompt(partition: CellTypePartition) -> str:
    """Render the extraction prompt; a pure function of the partition."""
    if not partition.records:
        raise EmptyPartition(f"partition {partition.key} has no records")
    return load_prompt("extraction").format(
        cell_name=partition.key.cell_name,
        markers=", ".join(partition.marker_symbols()),
    )


def parse_extraction_response(text: str) -> tuple[list[ExtractionFragment], list[ParseWarning]]:
    """Parse the sentinel-wrapped CSV block of an extraction response.

    Rows failing validation are dropped and reported as warnings, never
    silently accepted. Marker symbols are uppercase-normalized.
    """
    block = extract_block(text)
    if not block.found_sentinels:
        raise NoBlockFound("extraction response carries no sentinel-wrapped block")
    rows = [row for row in csv.reader(io.StringIO(block.content)) if any(cell.strip() for cell in row)]
    if rows and tuple(cell.strip().casefold() for cell in rows[0]) == _BLOCK_HEADER:
        rows = rows[1:]
    if not rows:
        raise EmptyBlock("extraction block contains no data rows")

    fragments: list[ExtractionFragment] = []
    warnings: list[ParseWarning] = []
    for row_no, row in enumerate(rows, start=1):
        content = ",".join(row)
        if len(row) != 3:
            warnings.append(ParseWarning(row_no, content, f"expected 3 columns, got {len(row)}"))
            continue
        feature_function, broad_cell_type, marker_symbol = (cell.strip() for cell in row)
        if not broad_cell_type:
            warnings.append(ParseWarning(row_no, content, "broad_cell_type is empty"))
            continue
        if not marker_symbol:
            warnings.append(ParseWarning(row_no, content, "marker_symbol is empty"))
            continue
        fragments.append(
            ExtractionFragment(
                feature_function=feature_function,
                broad_cell_type=broad_cell_type,
                marker_symbol=normalize_symbol(marker_symbol),
            )
        )
    return fragments, warnings
