"""In-memory annotation job store with ordered per-job event logs.

Jobs run on a bounded worker pool; every task tick appends one event with
a consecutive sequence number, and streams replay the full log before
following live appends, so reconnects see no gaps or duplicates.
"""
from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from ..workflow import AnnotationRequest, AnnotationResult, AnnotationWorkflow, ProgressEvent

TERMINAL_TASK = "terminal"


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


@dataclass(frozen=True)
class JobEvent:
    seq: int
    job_id: str
    iteration: int
    task: str
    status: str
    summary: str
    timestamp: float
    terminal: bool = False

    def as_dict(self) -> dict:
        return {
            "seq": self.seq,
            "job_id": self.job_id,
            "iteration": self.iteration,
            "task": self.task,
            "status": self.status,
            "summary": self.summary,
            "timestamp": self.timestamp,
            "terminal": self.terminal,
        }


@dataclass
class JobRecord:
    job_id: str
    request: AnnotationRequest
    state: JobState = JobState.QUEUED
    result: AnnotationResult | None = None
    error: str | None = None
    events: list[JobEvent] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)


class JobStore:
    """Schedules annotation requests and tracks their progress."""

    def __init__(
        self,
        workflow: AnnotationWorkflow,
        max_workers: int = 2,
        journal_path: str | Path | None = None,
    ):
        self._workflow = workflow
        self._jobs: dict[str, JobRecord] = {}
        self._lock = threading.Lock()
        self._changed = threading.Condition(self._lock)
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._journal_path = Path(journal_path) if journal_path else None
        self._journal_lock = threading.Lock()

    # --- lifecycle -----------------------------------------------------------

    def submit(self, request: AnnotationRequest) -> str:
        job_id = uuid.uuid4().hex
        record = JobRecord(job_id=job_id, request=request)
        with self._lock:
            self._jobs[job_id] = record
        self._pool.submit(self._run, job_id)
        return job_id

    def _run(self, job_id: str) -> None:
        record = self.get(job_id)
        with self._changed:
            record.state = JobState.RUNNING
            self._changed.notify_all()
        try:
            result = self._workflow.annotate(
                record.request, on_event=lambda event: self._append(job_id, event)
            )
        except Exception as exc:  # the failure reason travels to the client
            with self._changed:
                record.state = JobState.FAILED
                record.error = f"{type(exc).__name__}: {exc}"
                self._append_terminal(record, "failed", record.error)
                self._changed.notify_all()
            return
        with self._changed:
            record.state = JobState.DONE
            record.result = result
            self._append_terminal(record, "done", result.label)
            self._changed.notify_all()

    def _append(self, job_id: str, event: ProgressEvent) -> None:
        with self._changed:
            record = self._jobs[job_id]
            job_event = JobEvent(
                seq=len(record.events) + 1,
                job_id=job_id,
                iteration=event.iteration,
                task=event.task,
                status=event.status,
                summary=event.summary,
                timestamp=event.timestamp,
            )
            record.events.append(job_event)
            self._changed.notify_all()
        self._journal(job_event)

    def _append_terminal(self, record: JobRecord, status: str, summary: str) -> None:
        # caller holds the lock
        job_event = JobEvent(
            seq=len(record.events) + 1,
            job_id=record.job_id,
            iteration=0,
            task=TERMINAL_TASK,
            status=status,
            summary=summary,
            timestamp=time.time(),
            terminal=True,
        )
        record.events.append(job_event)
        self._journal(job_event)

    def _journal(self, event: JobEvent) -> None:
        if self._journal_path is None:
            return
        with self._journal_lock:
            with self._journal_path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event.as_dict(), sort_keys=True) + "\n")

    # --- queries ----------------------------------------------------------------

    def get(self, job_id: str) -> JobRecord:
        with self._lock:
            return self._jobs[job_id]

    def exists(self, job_id: str) -> bool:
        with self._lock:
            return job_id in self._jobs

    def stream_events(self, job_id: str, poll_timeout: float = 0.5) -> Iterator[JobEvent]:
        """Replay all events, then follow live ones until the terminal event."""
        next_seq = 1
        while True:
            with self._changed:
                record = self._jobs[job_id]
                while len(record.events) < next_seq and record.state in (
                    JobState.QUEUED,
                    JobState.RUNNING,
                ):
                    self._changed.wait(timeout=poll_timeout)
                batch = record.events[next_seq - 1 :]
            for event in batch:
                yield event
                next_seq = event.seq + 1
                if event.terminal:
                    return

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
