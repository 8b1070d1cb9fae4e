"""Bounded worker pool with scheduling-independent results.

Tasks are module-level callables applied to picklable arguments. Results
are handed back in task order whatever the completion order, so any
aggregation over them is reproducible for every worker count.
"""

from __future__ import annotations

import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ValidationError
from .logging import RunLogger

WORKERS_ENV = "REGPERC_WORKERS"


def derive_seed(master_seed: int, task_index: int) -> int:
    """64-bit task seed mixed from (master_seed, task_index)."""
    state = np.random.SeedSequence([int(master_seed), int(task_index)]).generate_state(1, np.uint64)
    return int(state[0])


def workers_from_env(default: int | None = None) -> int | None:
    """Worker count from REGPERC_WORKERS, or ``default`` when unset."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV} must be an integer (got {raw!r})", flag=WORKERS_ENV)
    if value < 1:
        raise ValidationError(f"{WORKERS_ENV} must be positive", flag=WORKERS_ENV)
    return value


def _timed(fn: Callable[[Any], Any], arg: Any) -> tuple[Any, float]:
    start = time.perf_counter()
    result = fn(arg)
    return result, (time.perf_counter() - start) * 1000


def run_tasks(
    fn: Callable[[Any], Any],
    tasks: Sequence[Any],
    *,
    workers: int = 1,
    logger: RunLogger | None = None,
    kind: str = "task",
    label: Callable[[int, Any], str] | None = None,
) -> list[Any]:
    """Apply ``fn`` to every task and return the results in task order."""
    if workers < 1:
        raise ValidationError("worker count must be positive", flag="--workers")
    results: list[Any] = [None] * len(tasks)
    durations: list[float] = [0.0] * len(tasks)

    if workers == 1 or len(tasks) <= 1:
        for i, task in enumerate(tasks):
            results[i], durations[i] = _timed(fn, task)
    else:
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as ex:
            futures = {ex.submit(_timed, fn, task): i for i, task in enumerate(tasks)}
            for fut in as_completed(futures):
                i = futures[fut]
                results[i], durations[i] = fut.result()

    if logger is not None:
        for i, task in enumerate(tasks):
            task_id = label(i, task) if label else f"{kind}-{i}"
            logger.record_task(task_id, kind, durations[i])
    return results
