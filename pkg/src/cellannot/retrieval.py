"""Dual-retrieval augmentation: markers in, standardized evidence blocks out.

Template mode answers marker association queries from the graph alone.
The optional LLM-query mode asks the model to produce a traversal in a
restricted path algebra (node filter, edge step, node filter, at most
three steps); anything that fails validation falls back to template mode
with the reason recorded, so the mode is never fatal.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Literal

from .errors import EmptyMarkerList, QueryRejected, UnknownTissue
from .gateway import ChatRequest, Gateway, extract_block
from .graph import (
    EDGE_ENDPOINTS,
    NO_ANSWER_SENTENCE,
    EdgeKind,
    KnowledgeGraph,
    MarkerAssociationTable,
    NodeKind,
    TissueScope,
    UnparsableLine,
    normalize_symbol,
)
from .graph.query import entity_sort_key
from .prompt_store import load_prompt

RetrieveMode = Literal["template", "llm-query"]

UNKNOWN_TOKEN = "unknown"

# Reference path templates, one per retrieval target. These are embedded
# in the LLM-query prompt as worked references and double as the executable
# definition of template-mode semantics.
REFERENCE_TEMPLATES: dict[NodeKind, str] = {
    NodeKind.BROAD_CELL_TYPE: (
        "(Marker) -[SUGGESTS_BROAD_TYPE]-> (BroadCellType)\n"
        "(Marker) <-[EXPRESSES]- (CellName) -[IS_A]-> (BroadCellType)"
    ),
    NodeKind.FEATURE_FUNCTION: (
        "(Marker) -[MARK]-> (FeatureFunction)\n"
        "(Marker) <-[EXPRESSES]- (CellName) -[HAS_FEATURE_FUNCTION]-> (FeatureFunction)"
    ),
}

MAX_PATH_STEPS = 3
MAX_PATH_LINES = 8


def describe_schema() -> str:
    """Human/model-readable description of the graph schema."""
    node_lines = ", ".join(kind.value for kind in NodeKind)
    edge_lines = []
    for kind, (src, dsts) in EDGE_ENDPOINTS.items():
        dst_names = " or ".join(sorted(d.value for d in dsts))
        edge_lines.append(f"  {kind.value}: {src.value} -> {dst_names}")
    return "Node kinds: " + node_lines + "\nEdge kinds:\n" + "\n".join(edge_lines)


# --- restricted traversal algebra --------------------------------------------


@dataclass(frozen=True)
class PathStep:
    edge: EdgeKind
    direction: Literal["out", "in"]
    node: NodeKind


@dataclass(frozen=True)
class PathQuery:
    start: NodeKind
    steps: tuple[PathStep, ...]


_NODE_TOKEN = re.compile(r"\s*\((\w+)\)")
_ARROW_TOKEN = re.compile(r"\s*(?:(<-)\[(\w+)\]-|-\[(\w+)\](->))")


def _parse_kind(token: str, enum_cls, line: str):
    try:
        return enum_cls(token)
    except ValueError:
        raise QueryRejected(f"unknown {enum_cls.__name__} {token!r} in {line!r}") from None


def parse_path_line(line: str) -> PathQuery:
    """Parse one path pattern like ``(Marker) -[MARK]-> (FeatureFunction)``."""
    match = _NODE_TOKEN.match(line)
    if not match:
        raise QueryRejected(f"path must start with a node filter: {line!r}")
    start = _parse_kind(match.group(1), NodeKind, line)
    pos = match.end()
    steps: list[PathStep] = []
    while pos < len(line) and line[pos:].strip():
        arrow = _ARROW_TOKEN.match(line, pos)
        if not arrow:
            raise QueryRejected(f"expected an edge step at column {pos} in {line!r}")
        if arrow.group(1):  # <-[KIND]-
            edge = _parse_kind(arrow.group(2), EdgeKind, line)
            direction: Literal["out", "in"] = "in"
        else:
            edge = _parse_kind(arrow.group(3), EdgeKind, line)
            direction = "out"
        pos = arrow.end()
        node_match = _NODE_TOKEN.match(line, pos)
        if not node_match:
            raise QueryRejected(f"edge step must be followed by a node filter in {line!r}")
        steps.append(PathStep(edge=edge, direction=direction, node=_parse_kind(node_match.group(1), NodeKind, line)))
        pos = node_match.end()
    if not steps:
        raise QueryRejected(f"path needs at least one edge step: {line!r}")
    if len(steps) > MAX_PATH_STEPS:
        raise QueryRejected(f"path exceeds {MAX_PATH_STEPS} steps: {line!r}")
    return PathQuery(start=start, steps=tuple(steps))


def validate_paths(paths: list[PathQuery], target: NodeKind) -> None:
    """Reject path sets that could not have come from the documented algebra."""
    if not paths:
        raise QueryRejected("query contains no path lines")
    if len(paths) > MAX_PATH_LINES:
        raise QueryRejected(f"query exceeds {MAX_PATH_LINES} path lines")
    for path in paths:
        if path.start is not NodeKind.MARKER:
            raise QueryRejected("every path must start at (Marker)")
        current = path.start
        for step in path.steps:
            allowed_src, allowed_dst = EDGE_ENDPOINTS[step.edge]
            if step.direction == "out":
                if current is not allowed_src or step.node not in allowed_dst:
                    raise QueryRejected(
                        f"{step.edge.value} cannot step {current.value} -> {step.node.value}"
                    )
            else:
                if step.node is not allowed_src or current not in allowed_dst:
                    raise QueryRejected(
                        f"{step.edge.value} cannot step {current.value} <- {step.node.value}"
                    )
            current = step.node
        if current is not target:
            raise QueryRejected(f"path ends at {current.value}, expected {target.value}")


def parse_traversal(text: str, target: NodeKind) -> list[PathQuery]:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    paths = [parse_path_line(line) for line in lines]
    validate_paths(paths, target)
    return paths


def execute_paths(
    graph: KnowledgeGraph,
    markers: list[str],
    scope: TissueScope,
    target: NodeKind,
    paths: list[PathQuery],
) -> MarkerAssociationTable:
    """Walk validated paths for every marker, honoring tissue scope.

    Scope semantics match the template engine: CellName hops are filtered
    to in-scope cells, and a path that never visits a CellName counts only
    when the marker is expressed by at least one in-scope cell.
    """
    in_scope_cells: set[int] | None = None
    if not scope.is_global:
        in_scope_cells = set()
        for tissue_name in sorted(scope.tissues):
            tissue = graph.find(NodeKind.TISSUE, tissue_name)
            if tissue is None:
                raise UnknownTissue(f"no Tissue node named {tissue_name!r}")
            in_scope_cells |= {n.id for n in graph.neighbors(tissue.id, EdgeKind.LOCATED_IN, "incoming")}

    rows: dict[str, tuple[str, ...]] = {}
    unresolved: list[str] = []
    for raw in markers:
        symbol = normalize_symbol(raw)
        if symbol in rows:
            continue
        entities: set[str] = set()
        marker = graph.find(NodeKind.MARKER, symbol)
        if marker is not None:
            direct_allowed = True
            if in_scope_cells is not None:
                expressing = {n.id for n in graph.neighbors(marker.id, EdgeKind.EXPRESSES, "incoming")}
                direct_allowed = bool(expressing & in_scope_cells)
            for path in paths:
                touches_cell = any(step.node is NodeKind.CELL_NAME for step in path.steps)
                if not touches_cell and not direct_allowed:
                    continue
                frontier = {marker.id}
                for step in path.steps:
                    next_ids: set[int] = set()
                    direction = "outgoing" if step.direction == "out" else "incoming"
                    for node_id in frontier:
                        for neighbor in graph.neighbors(node_id, step.edge, direction):
                            if neighbor.kind is step.node:
                                next_ids.add(neighbor.id)
                    if step.node is NodeKind.CELL_NAME and in_scope_cells is not None:
                        next_ids &= in_scope_cells
                    frontier = next_ids
                    if not frontier:
                        break
                entities.update(graph.node(i).name for i in frontier)
        rows[symbol] = tuple(sorted(entities, key=entity_sort_key))
        if not entities:
            unresolved.append(symbol)
    return MarkerAssociationTable(target=target, rows=rows, unresolved=unresolved)


# --- retrieve ----------------------------------------------------------------


def retrieve(
    graph: KnowledgeGraph,
    markers: list[str],
    scope: TissueScope,
    target: NodeKind,
    mode: RetrieveMode = "template",
    gateway: Gateway | None = None,
) -> MarkerAssociationTable:
    """Resolve markers to target entities, via templates or an LLM query."""
    if not markers:
        raise EmptyMarkerList("retrieve requires at least one marker")
    if mode == "template":
        table = graph.query_associations(markers, scope, target)
        table.notes.append("retrieval mode: template")
        return table
    if gateway is None:
        raise ValueError("llm-query mode requires a gateway")
    prompt = load_prompt("graph_query").format(
        schema=describe_schema(),
        template=REFERENCE_TEMPLATES[target],
        target_kind=target.value,
        markers=", ".join(markers),
    )
    response = gateway.chat(
        ChatRequest(
            system_prompt=load_prompt("graph_query_system"),
            user_prompt=prompt,
            tag=f"graph-query:{target.value}",
        )
    )
    try:
        paths = parse_traversal(extract_block(response).content, target)
        table = execute_paths(graph, markers, scope, target, paths)
        table.notes.append("retrieval mode: llm-query")
        return table
    except QueryRejected as rejection:
        table = graph.query_associations(markers, scope, target)
        table.notes.append(f"llm query rejected ({rejection}); fell back to template mode")
        return table


# --- evidence block grammar ---------------------------------------------------


def _escape_entity(name: str) -> str:
    # The line grammar reserves ':' and ','; source data avoids both.
    return name.replace(",", ";").replace(":", ";")


def format_block(table: MarkerAssociationTable) -> str:
    """Render the standardized evidence block, one ``SYMBOL: entities`` line each.

    A table where every marker is unresolved renders as the single fallback
    sentence instead of per-marker lines.
    """
    if table.all_unresolved:
        return NO_ANSWER_SENTENCE
    lines = []
    for symbol, entities in table.rows.items():
        if not entities:
            lines.append(f"{_escape_entity(symbol)}: {UNKNOWN_TOKEN}")
        else:
            lines.append(f"{_escape_entity(symbol)}: " + ", ".join(_escape_entity(e) for e in entities))
    return "\n".join(lines)


def parse_block(text: str, target: NodeKind | None = None) -> MarkerAssociationTable:
    """Inverse of format_block, tolerant of surrounding prose.

    The sentinel-wrapped region is extracted first when present. Lines that
    do not match the grammar are collected as warnings, never fatal.
    """
    content = extract_block(text).content.strip()
    if content == NO_ANSWER_SENTENCE:
        return MarkerAssociationTable(target=target, parsed_no_answer=True)
    rows: dict[str, tuple[str, ...]] = {}
    unresolved: list[str] = []
    warnings: list[UnparsableLine] = []
    for line_no, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        if ":" not in line:
            warnings.append(UnparsableLine(line_no=line_no, content=line))
            continue
        symbol, rest = line.split(":", 1)
        symbol = symbol.strip()
        if not symbol:
            warnings.append(UnparsableLine(line_no=line_no, content=line))
            continue
        rest = rest.strip()
        if not rest or rest == UNKNOWN_TOKEN:
            rows[symbol] = ()
            if symbol not in unresolved:
                unresolved.append(symbol)
            continue
        entities: list[str] = []
        for chunk in rest.split(","):
            entity = chunk.strip()
            if entity and entity not in entities:
                entities.append(entity)
        rows[symbol] = tuple(entities)
    return MarkerAssociationTable(
        target=target, rows=rows, unresolved=unresolved, warnings=warnings
    )
