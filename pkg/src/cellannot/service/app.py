"""HTTP service: annotation jobs with live progress, graph inspection.

Endpoints (all JSON unless noted)::

    POST /api/annotate                 submit markers, get a job id (202)
    GET  /api/jobs/{id}                job state, request, result
    GET  /api/jobs/{id}/events         server-sent events until terminal
    GET  /api/graph/stats              node/edge counts per kind
    GET  /api/graph/associations       retrieval evidence for the UI
    GET  /healthz                      liveness

GET endpoints are side-effect-free; the graph is shared read-only.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from ..errors import UnknownTissue
from ..gateway import Gateway
from ..graph import KnowledgeGraph, MarkerAssociationTable, NodeKind, TissueScope
from ..workflow import (
    AnnotationRequest,
    AnnotationResult,
    AnnotationWorkflow,
    IterationTrace,
)
from .jobs import JobEvent, JobStore

TARGET_PARAM = {
    "broad": NodeKind.BROAD_CELL_TYPE,
    "feature": NodeKind.FEATURE_FUNCTION,
}


class AnnotateBody(BaseModel):
    markers: list[str]
    tissues: list[str] = Field(default_factory=list)
    global_scope: bool = Field(default=False, alias="global")
    iterations: int = 5
    mode: str = "graph"

    model_config = {"populate_by_name": True}


def table_payload(table: MarkerAssociationTable) -> dict:
    return {
        "target": table.target.value if table.target else None,
        "rows": {symbol: list(entities) for symbol, entities in table.rows.items()},
        "unresolved": list(table.unresolved),
        "notes": list(table.notes),
    }


def trace_payload(trace: IterationTrace) -> dict:
    return {
        "iteration": trace.iteration,
        "broad_table": table_payload(trace.broad_table) if trace.broad_table else None,
        "broad_selection": trace.broad_selection,
        "feature_table": table_payload(trace.feature_table) if trace.feature_table else None,
        "feature_selection": trace.feature_selection,
        "label": trace.label,
        "graph_uninformed": trace.graph_uninformed,
        "notes": list(trace.notes),
    }


def result_payload(result: AnnotationResult) -> dict:
    return {
        "label": result.label,
        "votes": dict(result.votes),
        "mode": result.mode,
        "trace": [trace_payload(t) for t in result.trace],
    }


def job_payload(record) -> dict:
    return {
        "job_id": record.job_id,
        "state": record.state.value,
        "request": {
            "markers": record.request.markers,
            "tissues": sorted(record.request.scope.tissues),
            "global": record.request.scope.is_global,
            "iterations": record.request.iterations,
            "mode": record.request.mode,
        },
        "result": result_payload(record.result) if record.result else None,
        "error": record.error,
        "events": len(record.events),
    }


def _sse_format(event: JobEvent) -> str:
    name = "terminal" if event.terminal else "progress"
    return f"id: {event.seq}\nevent: {name}\ndata: {json.dumps(event.as_dict(), sort_keys=True)}\n\n"


def create_app(
    graph: KnowledgeGraph | None,
    gateway: Gateway,
    max_workers: int = 2,
    journal_path: str | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    """Assemble the service around one graph and one gateway."""
    app = FastAPI(title="cellannot", version="0.1.0")
    workflow = AnnotationWorkflow(graph, gateway)
    store = JobStore(workflow, max_workers=max_workers, journal_path=journal_path or None)
    app.state.store = store
    app.state.graph = graph

    @app.exception_handler(RequestValidationError)
    def body_validation_failure(request: Request, exc: RequestValidationError) -> JSONResponse:
        # validation failures answer 400 and name the offending field
        errors = exc.errors()
        field = ".".join(str(part) for part in errors[0]["loc"][1:]) if errors else "body"
        return JSONResponse(status_code=400, content={"detail": field or "body"})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "graph_loaded": graph is not None}

    @app.get("/api/graph/stats")
    def graph_stats() -> dict:
        if graph is None:
            raise HTTPException(status_code=503, detail="graph not loaded")
        return graph.stats().as_dict()

    @app.get("/api/graph/associations")
    def graph_associations(markers: str = "", tissues: str = "", target: str = "broad") -> dict:
        if graph is None:
            raise HTTPException(status_code=503, detail="graph not loaded")
        marker_list = [m.strip() for m in markers.split(",") if m.strip()]
        if not marker_list:
            raise HTTPException(status_code=400, detail="markers")
        if target not in TARGET_PARAM:
            raise HTTPException(status_code=400, detail="target must be 'broad' or 'feature'")
        tissue_list = [t.strip() for t in tissues.split(",") if t.strip()]
        scope = TissueScope.scoped(tissue_list) if tissue_list else TissueScope.global_scope()
        try:
            table = graph.query_associations(marker_list, scope, TARGET_PARAM[target])
        except UnknownTissue as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return table_payload(table)

    @app.post("/api/annotate", status_code=202)
    def annotate(body: AnnotateBody) -> dict:
        if graph is None:
            raise HTTPException(status_code=503, detail="graph not loaded")
        markers = [m for m in (m.strip() for m in body.markers) if m]
        if not markers:
            raise HTTPException(status_code=400, detail="markers")
        if body.iterations < 1:
            raise HTTPException(status_code=400, detail="iterations")
        if body.mode not in ("graph", "baseline"):
            raise HTTPException(status_code=400, detail="mode")
        if body.global_scope or not body.tissues:
            scope = TissueScope.global_scope()
        else:
            scope = TissueScope.scoped(body.tissues)
        request = AnnotationRequest(
            markers=markers, scope=scope, iterations=body.iterations, mode=body.mode
        )
        job_id = store.submit(request)
        return {"job_id": job_id}

    @app.get("/api/jobs/{job_id}")
    def job(job_id: str) -> dict:
        if not store.exists(job_id):
            raise HTTPException(status_code=404, detail="unknown job")
        return job_payload(store.get(job_id))

    @app.get("/api/jobs/{job_id}/events")
    def job_events(job_id: str) -> StreamingResponse:
        if not store.exists(job_id):
            raise HTTPException(status_code=404, detail="unknown job")

        def generate() -> Iterator[str]:
            for event in store.stream_events(job_id):
                yield _sse_format(event)

        return StreamingResponse(generate(), media_type="text/event-stream")

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
