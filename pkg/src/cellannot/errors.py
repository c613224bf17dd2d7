"""Exception hierarchy shared across the package.

Every error raised by cellannot derives from :class:`CellAnnotError`, so
callers can catch one base type at API boundaries.
"""


class CellAnnotError(Exception):
    """Base class for all cellannot errors."""


# --- graph store ---------------------------------------------------------


class EmptyName(CellAnnotError):
    """A node name was blank after trimming."""


class UnknownNode(CellAnnotError):
    """A node id or (kind, name) reference did not resolve."""


class KindMismatch(CellAnnotError):
    """An edge connected node kinds its edge kind does not permit."""


class GraphFinalized(CellAnnotError):
    """A mutation was attempted on a finalized (immutable) graph."""


class EmptyMarkerList(CellAnnotError):
    """An association query was issued with no marker symbols."""


class UnknownTissue(CellAnnotError):
    """A scoped tissue name matched no Tissue node."""


class IoFailure(CellAnnotError):
    """A snapshot file could not be read or written."""


class MalformedSnapshot(CellAnnotError):
    """A snapshot file failed to parse.

    Carries the 1-based line number and the offending line.
    """

    def __init__(self, message: str, line_no: int | None = None, line: str | None = None):
        detail = message
        if line_no is not None:
            detail = f"line {line_no}: {message}"
        super().__init__(detail)
        self.line_no = line_no
        self.line = line


# --- ingestion ------------------------------------------------------------


class MissingColumn(CellAnnotError):
    """A required CSV header column is absent."""

    def __init__(self, column: str):
        super().__init__(f"missing required column: {column!r}")
        self.column = column


class MalformedRow(CellAnnotError):
    """A CSV data row violated the record invariants."""

    def __init__(self, row_no: int, message: str):
        super().__init__(f"row {row_no}: {message}")
        self.row_no = row_no


class EmptyPartition(CellAnnotError):
    """An extraction prompt was requested for a partition with no records."""


class NoBlockFound(CellAnnotError):
    """An extraction response carried no sentinel-wrapped block."""


class EmptyBlock(CellAnnotError):
    """The sentinel-wrapped block contained no data rows."""


class OrphanFragment(CellAnnotError):
    """An extraction fragment referenced a partition key that does not exist."""


# --- retrieval --------------------------------------------------------------


class QueryRejected(CellAnnotError):
    """A model-generated traversal query failed validation.

    Never fatal in retrieve(): the caller downgrades it to a template-mode
    fallback and records the reason.
    """


# --- llm gateway ----------------------------------------------------------


class ProviderError(CellAnnotError):
    """The provider returned a non-retryable failure (or retries ran out)."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        detail = message
        if status is not None:
            excerpt = (body or "")[:200]
            detail = f"{message} (status {status}): {excerpt}"
        super().__init__(detail)
        self.status = status
        self.body = body


class Timeout(ProviderError):
    """The provider did not answer within the configured timeout."""


class RateLimited(ProviderError):
    """The provider kept rate-limiting after all retries."""


class UnterminatedBlock(CellAnnotError):
    """A BEGIN sentinel had no matching END sentinel."""


class MockScriptExhausted(CellAnnotError):
    """The scripted mock had no remaining entry matching a request tag."""


# --- evaluation -----------------------------------------------------------


class EmptyGroup(CellAnnotError):
    """A score was requested over an empty group."""


class EmptyBroad(CellAnnotError):
    """A candidate label was requested with a blank broad cell type."""


class LengthMismatch(CellAnnotError):
    """Two vectors of different lengths were compared."""


class ZeroVector(CellAnnotError):
    """Cosine similarity was requested against an all-zero vector."""


class GroupTooSmall(CellAnnotError):
    """Intra-group similarity needs at least two labels."""
