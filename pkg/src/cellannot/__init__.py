"""Knowledge-graph retrieval-augmented cell type annotation from marker genes.

Library layout:

- :mod:`cellannot.graph` — typed property graph, association queries, snapshots
- :mod:`cellannot.ingest` — ETL from raw marker CSVs to the graph
- :mod:`cellannot.retrieval` — dual-retrieval evidence blocks and parsing
- :mod:`cellannot.gateway` — chat/embedding providers with a scripted mock
- :mod:`cellannot.workflow` — the five-task annotation loop with voting
- :mod:`cellannot.evaluation` — manual-rubric and semantic scoring
- :mod:`cellannot.service` — HTTP/SSE job service
- :mod:`cellannot.cli` — command-line entry points
"""

from .gateway import ChatRequest, Gateway, MockProvider, ProviderConfig, build_gateway
from .graph import (
    EdgeKind,
    KnowledgeGraph,
    MarkerAssociationTable,
    NodeKind,
    TissueScope,
    load_snapshot,
    snapshot,
)
from .workflow import (
    AnnotationRequest,
    AnnotationResult,
    AnnotationWorkflow,
    majority_vote,
    render_trace_report,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRequest",
    "AnnotationResult",
    "AnnotationWorkflow",
    "ChatRequest",
    "EdgeKind",
    "Gateway",
    "KnowledgeGraph",
    "MarkerAssociationTable",
    "MockProvider",
    "NodeKind",
    "ProviderConfig",
    "TissueScope",
    "build_gateway",
    "load_snapshot",
    "majority_vote",
    "render_trace_report",
    "snapshot",
    "__version__",
]
