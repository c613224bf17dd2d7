"""Five-task annotation workflow with k-iteration majority voting.

Each iteration runs: broad type query, broad type selection, feature
query, feature selection, and final annotation. Retrieval is
deterministic over an immutable graph, so the two query tables are
computed once and shared by every iteration (noted in the trace); the
three selection/annotation tasks hit the model per iteration. A general
"markers + tissue name" prompt is kept as the comparison baseline.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Literal

from .gateway import ChatRequest, Gateway, extract_block
from .graph import (
    NO_ANSWER_SENTENCE,
    KnowledgeGraph,
    MarkerAssociationTable,
    NodeKind,
    TissueScope,
    canonical_name,
    normalize_symbol,
)
from .prompt_store import load_prompt
from .retrieval import RetrieveMode, format_block, retrieve

TASK_BROAD_QUERY = "broad_query"
TASK_BROAD_SELECTION = "broad_selection"
TASK_FEATURE_QUERY = "feature_query"
TASK_FEATURE_SELECTION = "feature_selection"
TASK_ANNOTATION = "annotation"
GRAPH_TASK_SEQUENCE = (
    TASK_BROAD_QUERY,
    TASK_BROAD_SELECTION,
    TASK_FEATURE_QUERY,
    TASK_FEATURE_SELECTION,
    TASK_ANNOTATION,
)

MAX_SELECTED_FEATURES = 3
UNKNOWN_LABEL = "unknown"

Mode = Literal["graph", "baseline"]


@dataclass
class AnnotationRequest:
    """What to annotate: ordered markers, tissue scope, vote count, mode."""

    markers: list[str]
    scope: TissueScope = field(default_factory=TissueScope.global_scope)
    iterations: int = 5
    mode: Mode = "graph"
    retrieval_mode: RetrieveMode = "template"

    def __post_init__(self) -> None:
        deduped: list[str] = []
        seen: set[str] = set()
        for marker in self.markers:
            symbol = normalize_symbol(marker)
            if symbol and symbol not in seen:
                seen.add(symbol)
                deduped.append(symbol)
        if not deduped:
            raise ValueError("request needs at least one marker symbol")
        self.markers = deduped
        if self.iterations < 1:
            raise ValueError("iterations must be a positive integer")
        if self.mode not in ("graph", "baseline"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def baseline_tissue_name(self) -> str:
        if self.scope.is_global:
            return "human"
        return ", ".join(sorted(self.scope.tissues))


@dataclass
class IterationTrace:
    """Record of one iteration's five task outcomes (None = Unanswered)."""

    iteration: int
    broad_table: MarkerAssociationTable | None
    broad_selection: str | None
    feature_table: MarkerAssociationTable | None
    feature_selection: list[str] | None
    label: str
    graph_uninformed: bool = False
    notes: list[str] = field(default_factory=list)


@dataclass
class AnnotationResult:
    label: str
    votes: dict[str, int]
    trace: list[IterationTrace]
    mode: Mode
    request: AnnotationRequest


@dataclass(frozen=True)
class ProgressEvent:
    """One task-level progress tick, ordered per request."""

    iteration: int
    task: str
    status: str  # completed | unanswered | flagged
    summary: str
    timestamp: float

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "task": self.task,
            "status": self.status,
            "summary": self.summary,
            "timestamp": self.timestamp,
        }


EventCallback = Callable[[ProgressEvent], None]


def majority_vote(labels: list[str]) -> tuple[str, dict[str, int]]:
    """Most frequent label after canonicalization.

    Counting folds case and whitespace; ties break to the label whose
    canonical form appeared earliest; the winner keeps its first-seen
    surface form.
    """
    if not labels:
        raise ValueError("majority_vote requires at least one label")
    counts: dict[str, int] = {}
    first_surface: dict[str, str] = {}
    first_index: dict[str, int] = {}
    for index, label in enumerate(labels):
        canon = canonical_name(label)
        counts[canon] = counts.get(canon, 0) + 1
        if canon not in first_surface:
            first_surface[canon] = label
            first_index[canon] = index
    winner = max(counts, key=lambda c: (counts[c], -first_index[c]))
    return first_surface[winner], counts


class AnnotationWorkflow:
    """Runs the multi-task annotation workflow over one graph and gateway."""

    def __init__(self, graph: KnowledgeGraph | None, gateway: Gateway):
        self.graph = graph
        self.gateway = gateway
        self._system_prompt = load_prompt("system")

    # --- individual tasks -------------------------------------------------

    def run_broad_query_task(
        self, markers: list[str], scope: TissueScope, mode: RetrieveMode = "template"
    ) -> MarkerAssociationTable:
        return retrieve(
            self.graph, markers, scope, NodeKind.BROAD_CELL_TYPE, mode=mode, gateway=self.gateway
        )

    def run_feature_query_task(
        self, markers: list[str], scope: TissueScope, mode: RetrieveMode = "template"
    ) -> MarkerAssociationTable:
        return retrieve(
            self.graph, markers, scope, NodeKind.FEATURE_FUNCTION, mode=mode, gateway=self.gateway
        )

    def _chat(self, prompt: str, tag: str, system: str | None = None) -> str:
        response = self.gateway.chat(
            ChatRequest(
                system_prompt=system or self._system_prompt, user_prompt=prompt, tag=tag
            )
        )
        return extract_block(response).content.strip()

    def run_broad_selection_task(
        self, table: MarkerAssociationTable
    ) -> tuple[str | None, list[str]]:
        """Pick the most probable broad type from the evidence block.

        All-unresolved tables short-circuit to Unanswered without a model
        call, recording the fallback sentence. Out-of-evidence answers get
        one corrective retry, then flagged acceptance.
        """
        notes: list[str] = []
        if table.all_unresolved:
            notes.append(f"broad selection unanswered: {NO_ANSWER_SENTENCE}")
            return None, notes
        block = format_block(table)
        prompt = load_prompt("broad_selection").format(
            markers=", ".join(table.rows), block=block
        )
        answer = self._chat(prompt, "broad-select")
        candidates = {canonical_name(e) for e in table.entities()}
        if canonical_name(answer) not in candidates:
            retry_prompt = load_prompt("selection_correction").format(answer=answer, prompt=prompt)
            retried = self._chat(retry_prompt, "broad-select:retry")
            if canonical_name(retried) in candidates:
                notes.append(f"broad selection corrected after retry (was {answer!r})")
                answer = retried
            elif not retried.strip():
                notes.append("flagged: empty broad selection answer twice; treated as unanswered")
                return None, notes
            else:
                answer = retried
                notes.append("flagged: broad selection outside retrieved evidence")
        return answer, notes

    def run_feature_selection_task(
        self, table: MarkerAssociationTable
    ) -> tuple[list[str] | None, list[str]]:
        """Select 2-3 high-confidence features from the evidence block.

        Answers are filtered to in-table entities and truncated to the
        first three in the model's stated order; fully out-of-evidence
        answers get one corrective retry, then flagged acceptance.
        """
        notes: list[str] = []
        if table.all_unresolved:
            notes.append(f"feature selection unanswered: {NO_ANSWER_SENTENCE}")
            return None, notes
        block = format_block(table)
        prompt = load_prompt("feature_selection").format(
            markers=", ".join(table.rows), block=block
        )
        candidates = {canonical_name(e) for e in table.entities()}

        def pick(answer: str) -> list[str]:
            chosen = [part.strip() for part in answer.split(",") if part.strip()]
            return [c for c in chosen if canonical_name(c) in candidates]

        answer = self._chat(prompt, "feature-select")
        selected = pick(answer)
        if not selected:
            retry_prompt = load_prompt("selection_correction").format(answer=answer, prompt=prompt)
            retried = self._chat(retry_prompt, "feature-select:retry")
            selected = pick(retried)
            if selected:
                notes.append(f"feature selection corrected after retry (was {answer!r})")
            else:
                selected = [part.strip() for part in retried.split(",") if part.strip()]
                if not selected:
                    notes.append("flagged: empty feature selection answer twice; treated as unanswered")
                    return None, notes
                notes.append("flagged: feature selection outside retrieved evidence")
        if len(selected) > MAX_SELECTED_FEATURES:
            notes.append(f"feature selection truncated from {len(selected)} to {MAX_SELECTED_FEATURES}")
            selected = selected[:MAX_SELECTED_FEATURES]
        return selected, notes

    def run_annotation_task(
        self,
        markers: list[str],
        broad: str | None,
        features: list[str] | None,
    ) -> tuple[str, bool, list[str]]:
        """Combine broad type, features, and markers into the final label.

        When both retrievals came back unanswered the prompt omits graph
        evidence entirely (graph-uninformed fallback). An empty answer is
        retried once, then recorded as the literal label "unknown".
        """
        notes: list[str] = []
        graph_uninformed = broad is None and features is None
        if graph_uninformed:
            prompt = load_prompt("annotation_uninformed").format(markers=", ".join(markers))
            notes.append("graph-uninformed fallback: annotating from markers alone")
        else:
            prompt = load_prompt("annotation").format(
                broad=broad if broad is not None else "not determined",
                features=", ".join(features) if features else "none selected",
                markers=", ".join(markers),
            )
        label = self._chat(prompt, "annotate")
        if not label:
            label = self._chat(prompt, "annotate:retry")
            if not label:
                label = UNKNOWN_LABEL
                notes.append("flagged: empty annotation answer twice; label set to unknown")
            else:
                notes.append("annotation retried after empty answer")
        return label, graph_uninformed, notes

    def run_baseline_general(self, markers: list[str], tissue_name: str) -> str:
        """Single general-purpose prompt, no graph access: the comparison arm."""
        prompt = load_prompt("baseline").format(
            TissueName=tissue_name, GeneList=", ".join(markers)
        )
        return self._chat(prompt, "baseline", system=load_prompt("baseline_system"))

    # --- full request ------------------------------------------------------

    def annotate(
        self, request: AnnotationRequest, on_event: EventCallback | None = None
    ) -> AnnotationResult:
        """Run the workflow ``request.iterations`` times and majority-vote.

        Emits one progress event per task per iteration. Any iteration
        failure propagates: there is no silent vote over fewer runs.
        """

        def emit(iteration: int, task: str, status: str, summary: str) -> None:
            if on_event is not None:
                on_event(
                    ProgressEvent(
                        iteration=iteration,
                        task=task,
                        status=status,
                        summary=summary,
                        timestamp=time.time(),
                    )
                )

        if request.mode == "baseline":
            return self._annotate_baseline(request, emit)
        if self.graph is None:
            raise ValueError("graph mode requires a loaded knowledge graph")

        # Retrieval is deterministic over the immutable graph: run the two
        # query tasks once and share the tables across iterations.
        broad_table = self.run_broad_query_task(
            request.markers, request.scope, request.retrieval_mode
        )
        feature_table = self.run_feature_query_task(
            request.markers, request.scope, request.retrieval_mode
        )
        shared_note = "query tables computed once and shared across iterations"

        labels: list[str] = []
        traces: list[IterationTrace] = []
        for iteration in range(1, request.iterations + 1):
            notes = [shared_note]
            emit(
                iteration,
                TASK_BROAD_QUERY,
                "completed",
                _table_summary(broad_table),
            )
            broad, broad_notes = self.run_broad_selection_task(broad_table)
            notes.extend(broad_notes)
            emit(
                iteration,
                TASK_BROAD_SELECTION,
                _selection_status(broad, broad_notes),
                broad if broad is not None else NO_ANSWER_SENTENCE,
            )
            emit(
                iteration,
                TASK_FEATURE_QUERY,
                "completed",
                _table_summary(feature_table),
            )
            features, feature_notes = self.run_feature_selection_task(feature_table)
            notes.extend(feature_notes)
            emit(
                iteration,
                TASK_FEATURE_SELECTION,
                _selection_status(features, feature_notes),
                ", ".join(features) if features else NO_ANSWER_SENTENCE,
            )
            label, graph_uninformed, annotation_notes = self.run_annotation_task(
                request.markers, broad, features
            )
            notes.extend(annotation_notes)
            emit(iteration, TASK_ANNOTATION, "completed", label)
            labels.append(label)
            traces.append(
                IterationTrace(
                    iteration=iteration,
                    broad_table=broad_table,
                    broad_selection=broad,
                    feature_table=feature_table,
                    feature_selection=features,
                    label=label,
                    graph_uninformed=graph_uninformed,
                    notes=notes,
                )
            )

        if len(labels) != request.iterations:
            raise RuntimeError(
                f"collected {len(labels)} labels for {request.iterations} iterations"
            )
        winner, votes = majority_vote(labels)
        return AnnotationResult(
            label=winner, votes=votes, trace=traces, mode="graph", request=request
        )

    def _annotate_baseline(self, request: AnnotationRequest, emit) -> AnnotationResult:
        tissue_name = request.baseline_tissue_name()
        labels: list[str] = []
        traces: list[IterationTrace] = []
        for iteration in range(1, request.iterations + 1):
            label = self.run_baseline_general(request.markers, tissue_name)
            emit(iteration, TASK_ANNOTATION, "completed", label)
            labels.append(label)
            traces.append(
                IterationTrace(
                    iteration=iteration,
                    broad_table=None,
                    broad_selection=None,
                    feature_table=None,
                    feature_selection=None,
                    label=label,
                    notes=["baseline mode: no graph access"],
                )
            )
        winner, votes = majority_vote(labels)
        return AnnotationResult(
            label=winner, votes=votes, trace=traces, mode="baseline", request=request
        )


def _table_summary(table: MarkerAssociationTable) -> str:
    resolved = len(table.rows) - len(table.unresolved)
    return f"{resolved}/{len(table.rows)} markers resolved"


def _selection_status(selection, notes: list[str]) -> str:
    if selection is None:
        return "unanswered"
    if any(note.startswith("flagged") for note in notes):
        return "flagged"
    return "completed"


def render_trace_report(result: AnnotationResult) -> str:
    """Structured text report of a full annotation request."""
    request = result.request
    lines = [
        "annotation report",
        "=================",
        f"label: {result.label}",
        "votes: " + ", ".join(f"{label} ({count})" for label, count in sorted(result.votes.items())),
        f"mode: {result.mode}",
        f"iterations: {request.iterations}",
        f"markers: {', '.join(request.markers)}",
        f"scope: {request.scope.describe()}",
    ]
    for trace in result.trace:
        lines += ["", f"iteration {trace.iteration}", "-" * len(f"iteration {trace.iteration}")]
        if trace.broad_table is not None:
            lines.append("broad type evidence:")
            lines += ["  " + line for line in format_block(trace.broad_table).splitlines()]
        lines.append(
            "broad selection: "
            + (trace.broad_selection if trace.broad_selection is not None else NO_ANSWER_SENTENCE)
        )
        if trace.feature_table is not None:
            lines.append("feature evidence:")
            lines += ["  " + line for line in format_block(trace.feature_table).splitlines()]
        lines.append(
            "feature selection: "
            + (", ".join(trace.feature_selection) if trace.feature_selection else NO_ANSWER_SENTENCE)
        )
        lines.append(f"label: {trace.label}")
        if trace.graph_uninformed:
            lines.append("graph-uninformed: yes")
        for note in trace.notes:
            lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
