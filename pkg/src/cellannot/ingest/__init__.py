"""ETL from raw marker CSV dumps to the association table and graph."""

from .extraction import build_extraction_prompt, parse_extraction_response
from .loader import load_raw, partition
from .pipeline import (
    MergeResult,
    PipelineResult,
    QuarantineEntry,
    build_graph,
    merge_and_emit,
    read_association_csv,
    run_pipeline,
)
from .records import (
    ASSOCIATION_COLUMNS,
    REQUIRED_COLUMNS,
    CellTypePartition,
    EnhancedRecord,
    ExtractionFragment,
    ParseWarning,
    PartitionKey,
    RawRecord,
)

__all__ = [
    "ASSOCIATION_COLUMNS",
    "REQUIRED_COLUMNS",
    "CellTypePartition",
    "EnhancedRecord",
    "ExtractionFragment",
    "MergeResult",
    "ParseWarning",
    "PartitionKey",
    "PipelineResult",
    "QuarantineEntry",
    "RawRecord",
    "build_extraction_prompt",
    "build_graph",
    "load_raw",
    "merge_and_emit",
    "parse_extraction_response",
    "partition",
    "read_association_csv",
    "run_pipeline",
]
