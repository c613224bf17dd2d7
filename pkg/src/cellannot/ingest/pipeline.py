"""Merge, emission, graph construction, and the end-to-end ingestion driver."""
from __future__ import annotations

import csv
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CellAnnotError, EmptyBlock, NoBlockFound, OrphanFragment
from ..gateway import ChatRequest, Gateway
from ..graph import EdgeKind, KnowledgeGraph, NodeKind
from ..graph.snapshot import snapshot as write_snapshot
from ..prompt_store import load_prompt
from .extraction import build_extraction_prompt, parse_extraction_response
from .loader import load_raw, partition
from .records import (
    ASSOCIATION_COLUMNS,
    CellTypePartition,
    EnhancedRecord,
    ExtractionFragment,
    PartitionKey,
)

logger = logging.getLogger(__name__)


@dataclass
class MergeResult:
    records: list[EnhancedRecord]
    unified_csv: Path | None = None
    per_tissue_csvs: dict[str, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class QuarantineEntry:
    key: PartitionKey
    reason: str
    detail: str


@dataclass
class PipelineResult:
    records: list[EnhancedRecord]
    graph: KnowledgeGraph
    unified_csv: Path
    per_tissue_csvs: dict[str, Path]
    quarantine_csv: Path
    snapshot_path: Path
    quarantined: list[QuarantineEntry]


def _sanitize_filename(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower() or "unnamed"


def _write_csv(path: Path, header: tuple[str, ...] | list[str], rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def merge_and_emit(
    partitions: list[CellTypePartition],
    fragments: dict[PartitionKey, list[ExtractionFragment]],
    out_dir: str | Path | None = None,
) -> MergeResult:
    """Join fragments with their partition's attributes and emit CSVs.

    Output ordering is deterministic: records sort by partition key, then
    marker symbol, then the remaining fragment fields. Per-tissue files are
    grouped by tissue_class; the unified CSV spans everything.
    """
    by_key = {p.key: p for p in partitions}
    for key in fragments:
        if key not in by_key:
            raise OrphanFragment(f"fragments keyed to unknown partition {key}")

    records: list[EnhancedRecord] = []
    for key, fragment_list in fragments.items():
        for fragment in fragment_list:
            records.append(
                EnhancedRecord(
                    cell_name=key.cell_name,
                    broad_cell_type=fragment.broad_cell_type,
                    feature_function=fragment.feature_function,
                    marker_symbol=fragment.marker_symbol,
                    tissue_type=key.tissue_type,
                    tissue_class=key.tissue_class,
                    cancer_type=key.cancer_type,
                    cell_class=key.cell_type,
                    source_partition=key,
                )
            )
    records.sort(
        key=lambda r: (
            r.source_partition,
            r.marker_symbol,
            r.feature_function,
            r.broad_cell_type,
        )
    )

    result = MergeResult(records=records)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.unified_csv = _write_csv(
            out_dir / "associations.csv", ASSOCIATION_COLUMNS, (r.as_row() for r in records)
        )
        tissue_classes = sorted({r.tissue_class for r in records})
        for tissue_class in tissue_classes:
            subset = [r for r in records if r.tissue_class == tissue_class]
            path = out_dir / f"tissue_{_sanitize_filename(tissue_class)}.csv"
            _write_csv(path, ASSOCIATION_COLUMNS, (r.as_row() for r in subset))
            result.per_tissue_csvs[tissue_class] = path
    return result


def read_association_csv(path: str | Path) -> list[EnhancedRecord]:
    """Read a unified association CSV back into records."""
    records: list[EnhancedRecord] = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            key = PartitionKey(
                tissue_class=row["tissue_class"],
                cell_name=row["cell_name"],
                cell_type=row["cell_class"],
                cancer_type=row["cancer_type"],
                tissue_type=row["tissue_type"],
            )
            records.append(
                EnhancedRecord(
                    cell_name=row["cell_name"],
                    broad_cell_type=row["broad_cell_type"],
                    feature_function=row["feature_function"],
                    marker_symbol=row["marker_symbol"],
                    tissue_type=row["tissue_type"],
                    tissue_class=row["tissue_class"],
                    cancer_type=row["cancer_type"],
                    cell_class=row["cell_class"],
                    source_partition=key,
                )
            )
    return records


def build_graph(records: list[EnhancedRecord]) -> KnowledgeGraph:
    """Construct and finalize the knowledge graph from association records.

    Every non-empty field creates its node; the seven edge kinds are laid
    per record. Graph store errors gain record provenance on the way up.
    """
    graph = KnowledgeGraph()
    for index, record in enumerate(records):
        try:
            marker = graph.upsert_node(NodeKind.MARKER, record.marker_symbol)
            cell = graph.upsert_node(NodeKind.CELL_NAME, record.cell_name)
            broad = graph.upsert_node(NodeKind.BROAD_CELL_TYPE, record.broad_cell_type)
            graph.add_edge(cell, EdgeKind.EXPRESSES, marker)
            graph.add_edge(cell, EdgeKind.IS_A, broad)
            graph.add_edge(marker, EdgeKind.SUGGESTS_BROAD_TYPE, broad)
            if record.feature_function.strip():
                feature = graph.upsert_node(NodeKind.FEATURE_FUNCTION, record.feature_function)
                graph.add_edge(marker, EdgeKind.MARK, feature)
                graph.add_edge(cell, EdgeKind.HAS_FEATURE_FUNCTION, feature)
            if record.tissue_type.strip():
                tissue = graph.upsert_node(
                    NodeKind.TISSUE, record.tissue_type, {"tissue_class": record.tissue_class}
                )
                graph.add_edge(cell, EdgeKind.LOCATED_IN, tissue)
            if record.cancer_type.strip():
                cancer = graph.upsert_node(NodeKind.CANCER_TYPE, record.cancer_type)
                graph.add_edge(cell, EdgeKind.IN_CONTEXT, cancer)
            if record.cell_class.strip():
                cell_class = graph.upsert_node(NodeKind.CELL_CLASS, record.cell_class)
                graph.add_edge(cell, EdgeKind.IN_CONTEXT, cell_class)
        except CellAnnotError as exc:
            raise type(exc)(f"record {index} (cell {record.cell_name!r}): {exc}") from exc
    return graph.finalize()


def run_pipeline(
    input_csv: str | Path,
    out_dir: str | Path,
    gateway: Gateway,
    workers: int = 1,
) -> PipelineResult:
    """Full ETL: raw CSV -> partitions -> extraction -> merge -> graph.

    Partitions whose responses cannot be structured are quarantined to a
    side-channel CSV rather than dropped silently. With a caching or mock
    gateway the whole run is deterministic.
    """
    records = load_raw(input_csv)
    partitions = partition(records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    system_prompt = load_prompt("system")

    def extract(part: CellTypePartition) -> tuple[PartitionKey, str]:
        prompt = build_extraction_prompt(part)
        response = gateway.chat(
            ChatRequest(system_prompt=system_prompt, user_prompt=prompt, tag=part.key.tag())
        )
        return part.key, response

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            responses = list(pool.map(extract, partitions))
    else:
        responses = [extract(part) for part in partitions]

    fragments: dict[PartitionKey, list] = {}
    quarantined: list[QuarantineEntry] = []
    for key, response in responses:
        try:
            parsed, warnings = parse_extraction_response(response)
        except (NoBlockFound, EmptyBlock) as exc:
            quarantined.append(QuarantineEntry(key=key, reason=type(exc).__name__, detail=str(exc)))
            logger.warning("partition %s quarantined: %s", key, exc)
            continue
        fragments[key] = parsed
        for warning in warnings:
            quarantined.append(
                QuarantineEntry(
                    key=key,
                    reason=f"row {warning.row_no}: {warning.reason}",
                    detail=warning.content,
                )
            )

    merged = merge_and_emit(partitions, fragments, out_dir)
    graph = build_graph(merged.records)
    snapshot_path = write_snapshot(graph, out_dir / "graph.snapshot")

    quarantined.sort(key=lambda q: (q.key, q.reason, q.detail))
    quarantine_csv = _write_csv(
        out_dir / "quarantine.csv",
        list(PartitionKey._fields) + ["reason", "detail"],
        ([*q.key, q.reason, q.detail] for q in quarantined),
    )
    return PipelineResult(
        records=merged.records,
        graph=graph,
        unified_csv=merged.unified_csv,
        per_tissue_csvs=merged.per_tissue_csvs,
        quarantine_csv=quarantine_csv,
        snapshot_path=snapshot_path,
        quarantined=quarantined,
    )
