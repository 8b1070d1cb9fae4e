"""Structured logging: per-task run logs with timing metrics.

Provides a logging framework for experiment runs that captures:
- Task start/end timestamps
- Duration per task (graph realization, lambda grid point, ...)
- Task metadata (seeds, sizes, sample counts)
- Skips and failures with their reason
- Run-level counts
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class TaskStatus(Enum):
    """Lifecycle states of a logged task."""
    STARTED = "started"
    COMPLETED = "completed"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class TaskLog:
    """Log entry for a single task."""
    task_id: str
    kind: str
    status: TaskStatus = TaskStatus.STARTED
    timestamp: float = field(default_factory=time.time)
    duration_ms: float | None = None
    error: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Convert to serializable dict."""
        d: dict[str, Any] = {
            "task_id": self.task_id,
            "kind": self.kind,
            "status": self.status.value,
            "timestamp": self.timestamp,
        }
        if self.duration_ms is not None:
            d["duration_ms"] = round(self.duration_ms, 3)
        if self.error:
            d["error"] = self.error
        if self.metadata:
            d["metadata"] = self.metadata
        return d


@dataclass
class RunLog:
    """Aggregated log for one command invocation."""
    command: str
    started_at: float = field(default_factory=time.time)
    finished_at: float | None = None
    status: str = "running"
    tasks: list[TaskLog] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def total_duration_ms(self) -> float | None:
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at) * 1000

    @property
    def task_count(self) -> int:
        return len(self.tasks)

    def count(self, status: TaskStatus) -> int:
        return sum(1 for t in self.tasks if t.status is status)

    def finish(self, status: str = "completed") -> None:
        self.finished_at = time.time()
        self.status = status

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "command": self.command,
            "started_at": self.started_at,
            "status": self.status,
            "tasks": [t.to_dict() for t in self.tasks],
        }
        if self.finished_at:
            d["finished_at"] = self.finished_at
            d["total_duration_ms"] = round(self.total_duration_ms, 3)
        if self.errors:
            d["errors"] = self.errors
        return d

    def to_json(self, pretty: bool = False) -> str:
        indent = 2 if pretty else None
        return json.dumps(self.to_dict(), indent=indent, default=str)

    def summary(self) -> str:
        duration = f"{self.total_duration_ms:.1f}ms" if self.total_duration_ms else "running"
        lines = [
            f"Run: {self.command} [{self.status}]",
            f"Duration: {duration}",
            f"Tasks: {self.count(TaskStatus.COMPLETED)}/{self.task_count} completed, "
            f"{self.count(TaskStatus.SKIPPED)} skipped",
            "-" * 50,
        ]
        for t in self.tasks:
            dur = f"{t.duration_ms:.1f}ms" if t.duration_ms else "-"
            lines.append(f"  [{t.status.value}] {t.task_id} ({t.kind}) [{dur}]")
            if t.error:
                lines.append(f"     -> {t.error}")
        if self.errors:
            lines.append("-" * 50)
            for err in self.errors:
                lines.append(f"  ! {err}")
        return "\n".join(lines)


class RunLogger:
    """Logger that tracks the tasks of one run.

    Tasks executed in worker processes report their own duration; the
    collector records them with ``record_task`` so log order follows
    task order, not completion order.
    """

    def __init__(self, command: str):
        self.run = RunLog(command=command)
        self._starts: dict[str, float] = {}

    def start_task(self, task_id: str, kind: str, **metadata) -> None:
        """Log the start of a task."""
        self._starts[task_id] = time.time()
        self.run.tasks.append(TaskLog(task_id=task_id, kind=kind, metadata=metadata))

    def complete_task(self, task_id: str, **metadata) -> None:
        """Log the successful completion of a task."""
        log = self._find(task_id)
        if log:
            log.status = TaskStatus.COMPLETED
            start = self._starts.get(task_id)
            if start:
                log.duration_ms = (time.time() - start) * 1000
            log.metadata.update(metadata)

    def fail_task(self, task_id: str, error: str) -> None:
        """Log a task failure."""
        log = self._find(task_id)
        if log:
            log.status = TaskStatus.FAILED
            log.error = error
            start = self._starts.get(task_id)
            if start:
                log.duration_ms = (time.time() - start) * 1000
        self.run.errors.append(f"{task_id}: {error}")

    def skip_task(self, task_id: str, kind: str, reason: str = "") -> None:
        """Log a skipped task."""
        self.run.tasks.append(TaskLog(
            task_id=task_id,
            kind=kind,
            status=TaskStatus.SKIPPED,
            error=reason or None,
        ))

    def record_task(self, task_id: str, kind: str, duration_ms: float, **metadata) -> None:
        """Log a task that ran elsewhere and reported its own timing."""
        self.run.tasks.append(TaskLog(
            task_id=task_id,
            kind=kind,
            status=TaskStatus.COMPLETED,
            duration_ms=duration_ms,
            metadata=metadata,
        ))

    def finish(self, status: str | None = None) -> RunLog:
        """Finalize the run log."""
        if status is None:
            status = "failed" if self.run.errors else "completed"
        self.run.finish(status)
        return self.run

    def _find(self, task_id: str) -> TaskLog | None:
        for log in reversed(self.run.tasks):
            if log.task_id == task_id:
                return log
        return None
