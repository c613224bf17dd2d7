"""Deterministic line-delimited snapshot format for knowledge graphs.

One record per line, tab-separated, UTF-8::

    # cellannot-graph v1 nodes=<n> edges=<m>
    N<TAB>kind<TAB>name<TAB>prop=val;prop=val
    E<TAB>kind<TAB>src_kind:src_name<TAB>dst_kind:dst_name

Nodes are sorted by kind then canonical name, edges by kind then their
endpoints' canonical names, so two snapshots of the same graph are
byte-identical. The header carries the format version and record counts,
which lets the loader detect truncated files.
"""
from __future__ import annotations

from pathlib import Path

from ..errors import IoFailure, MalformedSnapshot
from .model import EdgeKind, NodeKind
from .store import KnowledgeGraph

FORMAT_VERSION = "cellannot-graph v1"

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_PROP_ESCAPES = {**_ESCAPES, ";": "\\;", "=": "\\="}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r", ";": ";", "=": "="}


def _escape(value: str, table: dict[str, str]) -> str:
    return "".join(table.get(ch, ch) for ch in value)


def _unescape(value: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            mapped = _UNESCAPES.get(value[i + 1])
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _split_escaped(text: str, sep: str) -> list[str]:
    """Split on ``sep`` while honoring backslash escapes."""
    parts: list[str] = []
    buf: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            buf.append(ch)
            buf.append(text[i + 1])
            i += 2
            continue
        if ch == sep:
            parts.append("".join(buf))
            buf = []
            i += 1
            continue
        buf.append(ch)
        i += 1
    parts.append("".join(buf))
    return parts


def dumps(graph: KnowledgeGraph) -> str:
    """Serialize a finalized graph to the snapshot text."""
    if not graph.finalized:
        raise ValueError("snapshot requires a finalized graph")
    nodes = sorted(graph.nodes(), key=lambda n: (n.kind.value, n.canonical))
    node_by_id = {n.id: n for n in nodes}
    edges = sorted(
        graph.edges(),
        key=lambda e: (
            e.kind.value,
            node_by_id[e.src].kind.value,
            node_by_id[e.src].canonical,
            node_by_id[e.dst].kind.value,
            node_by_id[e.dst].canonical,
        ),
    )
    lines = [f"# {FORMAT_VERSION} nodes={len(nodes)} edges={len(edges)}"]
    for node in nodes:
        props = ";".join(
            f"{_escape(k, _PROP_ESCAPES)}={_escape(v, _PROP_ESCAPES)}"
            for k, v in sorted(node.properties.items())
        )
        lines.append(f"N\t{node.kind.value}\t{_escape(node.name, _ESCAPES)}\t{props}")
    for edge in edges:
        src = node_by_id[edge.src]
        dst = node_by_id[edge.dst]
        lines.append(
            f"E\t{edge.kind.value}"
            f"\t{src.kind.value}:{_escape(src.name, _ESCAPES)}"
            f"\t{dst.kind.value}:{_escape(dst.name, _ESCAPES)}"
        )
    return "\n".join(lines) + "\n"


def snapshot(graph: KnowledgeGraph, path: str | Path) -> Path:
    """Write the snapshot file and return its path."""
    path = Path(path)
    try:
        path.write_text(dumps(graph), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write snapshot {path}: {exc}") from exc
    return path


def _parse_node_kind(token: str, line_no: int, line: str) -> NodeKind:
    try:
        return NodeKind(token)
    except ValueError:
        raise MalformedSnapshot(f"unknown node kind {token!r}", line_no, line) from None


def loads(text: str) -> KnowledgeGraph:
    """Parse snapshot text into a finalized graph."""
    lines = text.split("\n")
    declared_nodes: int | None = None
    declared_edges: int | None = None
    header_seen = False
    node_lines: list[tuple[int, str]] = []
    edge_lines: list[tuple[int, str]] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if not header_seen:
                if FORMAT_VERSION not in line:
                    raise MalformedSnapshot(
                        f"unsupported snapshot header (expected {FORMAT_VERSION!r})", line_no, line
                    )
                header_seen = True
                for token in line.split():
                    if token.startswith("nodes="):
                        declared_nodes = int(token[len("nodes="):])
                    elif token.startswith("edges="):
                        declared_edges = int(token[len("edges="):])
            continue
        if not header_seen:
            raise MalformedSnapshot("missing format header", line_no, line)
        if line.startswith("N\t"):
            node_lines.append((line_no, line))
        elif line.startswith("E\t"):
            edge_lines.append((line_no, line))
        else:
            raise MalformedSnapshot("unknown record type", line_no, line)

    if not header_seen:
        raise MalformedSnapshot("missing format header", line_no=1, line=text[:80])

    graph = KnowledgeGraph()
    for line_no, line in node_lines:
        fields = line.split("\t")
        if len(fields) != 4:
            raise MalformedSnapshot(f"node record needs 4 fields, got {len(fields)}", line_no, line)
        _, kind_token, name_token, props_token = fields
        kind = _parse_node_kind(kind_token, line_no, line)
        properties: dict[str, str] = {}
        if props_token:
            for pair in _split_escaped(props_token, ";"):
                kv = _split_escaped(pair, "=")
                if len(kv) != 2:
                    raise MalformedSnapshot(f"bad property token {pair!r}", line_no, line)
                properties[_unescape(kv[0])] = _unescape(kv[1])
        graph.upsert_node(kind, _unescape(name_token), properties)

    for line_no, line in edge_lines:
        fields = line.split("\t")
        if len(fields) != 4:
            raise MalformedSnapshot(f"edge record needs 4 fields, got {len(fields)}", line_no, line)
        _, kind_token, src_token, dst_token = fields
        try:
            kind = EdgeKind(kind_token)
        except ValueError:
            raise MalformedSnapshot(f"unknown edge kind {kind_token!r}", line_no, line) from None
        endpoints = []
        for token in (src_token, dst_token):
            if ":" not in token:
                raise MalformedSnapshot(f"bad endpoint {token!r}", line_no, line)
            kind_part, name_part = token.split(":", 1)
            node_kind = _parse_node_kind(kind_part, line_no, line)
            node = graph.find(node_kind, _unescape(name_part))
            if node is None:
                raise MalformedSnapshot(f"edge references unknown node {token!r}", line_no, line)
            endpoints.append(node.id)
        graph.add_edge(endpoints[0], kind, endpoints[1])

    stats = graph.stats()
    if declared_nodes is not None and stats.node_count != declared_nodes:
        raise MalformedSnapshot(
            f"header declares {declared_nodes} nodes but file has {stats.node_count} (truncated?)"
        )
    if declared_edges is not None and stats.edge_count != declared_edges:
        raise MalformedSnapshot(
            f"header declares {declared_edges} edges but file has {stats.edge_count} (truncated?)"
        )
    return graph.finalize()


def load_snapshot(path: str | Path) -> KnowledgeGraph:
    """Read and parse a snapshot file into a finalized graph."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read snapshot {path}: {exc}") from exc
    return loads(text)
