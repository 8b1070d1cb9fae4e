"""Tests for regperc.parallel."""

import math

import pytest

from regperc.errors import ValidationError
from regperc.logging import RunLogger
from regperc.parallel import derive_seed, run_tasks, workers_from_env


class TestSeeds:

    def test_deterministic(self):
        assert derive_seed(42, 3) == derive_seed(42, 3)

    def test_distinct(self):
        seeds = {derive_seed(7, k) for k in range(100)}
        assert len(seeds) == 100
        assert derive_seed(1, 0) != derive_seed(2, 0)

    def test_range(self):
        for k in range(10):
            assert 0 <= derive_seed(2**64 - 1, k) < 2**64


class TestWorkersFromEnv:

    def test_unset(self):
        assert workers_from_env() is None
        assert workers_from_env(4) == 4

    def test_set(self, monkeypatch):
        monkeypatch.setenv("REGPERC_WORKERS", "3")
        assert workers_from_env(1) == 3

    def test_blank(self, monkeypatch):
        monkeypatch.setenv("REGPERC_WORKERS", "  ")
        assert workers_from_env(2) == 2

    @pytest.mark.parametrize("raw", ["x", "0", "-2"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("REGPERC_WORKERS", raw)
        with pytest.raises(ValidationError):
            workers_from_env()


class TestRunTasks:

    def test_serial_order(self):
        assert run_tasks(math.factorial, [5, 3, 7]) == [120, 6, 5040]

    def test_pool_order(self):
        tasks = [12, 1, 9, 4, 6]
        assert run_tasks(math.factorial, tasks, workers=3) == [math.factorial(t) for t in tasks]

    def test_logged_in_task_order(self):
        logger = RunLogger("test")
        run_tasks(math.factorial, [4, 2, 3], workers=2, logger=logger, kind="fact",
                  label=lambda i, t: f"fact-{t}")
        ids = [t.task_id for t in logger.run.tasks]
        assert ids == ["fact-4", "fact-2", "fact-3"]
        assert all(t.kind == "fact" and t.duration_ms is not None for t in logger.run.tasks)

    def test_default_labels(self):
        logger = RunLogger("test")
        run_tasks(abs, [-1, -2], logger=logger, kind="job")
        assert [t.task_id for t in logger.run.tasks] == ["job-0", "job-1"]

    def test_empty(self):
        assert run_tasks(abs, [], workers=4) == []

    def test_worker_count(self):
        with pytest.raises(ValidationError, match="--workers"):
            run_tasks(abs, [1], workers=0)
