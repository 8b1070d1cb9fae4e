"""Tests for regperc.level_sets."""

import math

import numpy as np
import pytest

from regperc import level_sets
from regperc.errors import (
    LengthMismatch,
    NoTransition,
    TooFewPoints,
    ValidationError,
)
from regperc.formats import read_csv
from regperc.level_sets import (
    RatioCurve,
    ThresholdSample,
    bin_threshold_samples,
    brute_force_ratio,
    collect_threshold_samples,
    critical_curve_experiment,
    ratio_at,
    sharpening_experiment,
    steepest_point,
    steepest_point_of_samples,
    sweep_ratio_curve,
    write_critical_curve_csv,
    write_curve_csv,
    write_curves_csv,
    write_sharpening_csv,
)
from regperc.logging import RunLogger
from regperc.regular_graph import generate_regular
from regperc.spectral import eigendecompose, nearest_eigenpair, spectrum_support

SQUARE_F = [3.0, 1.0, 2.0, 0.0]


def _logistic(center, scale, lo=-0.2, hi=0.8, points=2001):
    thresholds = np.linspace(hi, lo, points)
    ratios = 1.0 / (1.0 + np.exp((thresholds - center) / scale))
    return thresholds, ratios


class TestSweep:

    def test_square(self, square):
        curve = sweep_ratio_curve(square, SQUARE_F)
        assert curve.thresholds.tolist() == [3.0, 2.0, 1.0, 0.0]
        assert curve.induced_sizes.tolist() == [1, 2, 3, 4]
        assert curve.max_component_sizes.tolist() == [1, 1, 3, 4]
        assert len(curve) == 4

    def test_ratio_at(self, square):
        curve = sweep_ratio_curve(square, SQUARE_F)
        assert ratio_at(curve, 1.5) == 0.5
        assert ratio_at(curve, 2.0) == 1.0
        assert ratio_at(curve, 0.5) == 1.0
        assert ratio_at(curve, 3.0) == 0.0
        assert ratio_at(curve, -1.0) == 1.0

    def test_ties_collapse(self, square):
        curve = sweep_ratio_curve(square, [1.0, 1.0, 0.0, 0.0])
        assert curve.thresholds.tolist() == [1.0, 0.0]
        assert curve.induced_sizes.tolist() == [2, 4]
        assert curve.max_component_sizes.tolist() == [2, 4]

    def test_length_mismatch(self, square):
        with pytest.raises(LengthMismatch):
            sweep_ratio_curve(square, [1.0, 2.0])
        with pytest.raises(LengthMismatch):
            brute_force_ratio(square, [1.0], 0.0)

    def test_monotone(self, random_cubic):
        f = np.random.default_rng(3).standard_normal(random_cubic.n)
        curve = sweep_ratio_curve(random_cubic, f)
        assert np.all(np.diff(curve.thresholds) < 0)
        assert np.all(np.diff(curve.induced_sizes) > 0)
        assert np.all(np.diff(curve.max_component_sizes) >= 0)
        assert curve.induced_sizes[-1] == random_cubic.n
        assert np.all((curve.ratios > 0) & (curve.ratios <= 1))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            n = int(rng.integers(8, 20)) * 2
            d = int(rng.integers(3, 5))
            g = generate_regular(n, d, trial)
            # small integer range forces ties
            f = rng.integers(-3, 4, size=n).astype(float)
            curve = sweep_ratio_curve(g, f)
            levels = np.concatenate([curve.thresholds, curve.thresholds - 0.5, [10.0]])
            for alpha in levels:
                induced, largest = brute_force_ratio(g, f, alpha)
                expected = largest / induced if induced else 0.0
                assert ratio_at(curve, alpha) == pytest.approx(expected)

    def test_brute_force_empty(self, square):
        assert brute_force_ratio(square, SQUARE_F, 5.0) == (0, 0)

    def test_curve_csv(self, square, tmp_path):
        path = write_curve_csv(sweep_ratio_curve(square, SQUARE_F), tmp_path / "curve.csv")
        header, rows = read_csv(path)
        assert header == ["alpha", "induced", "max_component", "ratio"]
        assert rows[1] == ["2", "2", "1", "0.5"]

    def test_curves_csv(self, square, tmp_path):
        curve = sweep_ratio_curve(square, SQUARE_F)
        path = write_curves_csv([(0, -1.0, curve), (3, 2.0, curve)], tmp_path / "curves.csv")
        header, rows = read_csv(path)
        assert header == ["index", "lambda", "alpha", "induced", "max_component", "ratio"]
        assert len(rows) == 2 * len(curve)
        assert rows[0][:2] == ["0", "-1"]
        assert rows[-1][:2] == ["3", "2"]
        assert rows[1][2:] == ["2", "2", "1", "0.5"]


class TestSteepestPoint:

    def test_step(self):
        thresholds = np.linspace(1.0, 0.0, 2001)
        ratios = np.where(thresholds <= 0.6, 1.0, 0.0)
        est = steepest_point_of_samples(thresholds, ratios)
        assert est.alpha_c == pytest.approx(0.6, abs=2.0 / 511)
        assert est.window[0] < est.alpha_c < est.window[1]
        assert est.n_points == 2001

    def test_logistic(self):
        thresholds, ratios = _logistic(0.3, 0.05)
        est = steepest_point_of_samples(thresholds, ratios)
        assert est.alpha_c == pytest.approx(0.3, abs=0.01)
        assert est.width == pytest.approx(2 * math.log(4) * 0.05, abs=0.01)

    def test_whole_graph_always_connected(self):
        thresholds = np.linspace(1.0, 0.0, 100)
        curve = RatioCurve(
            thresholds=thresholds,
            induced_sizes=np.arange(1, 101),
            max_component_sizes=np.arange(1, 101),
        )
        with pytest.raises(NoTransition):
            steepest_point(curve)

    def test_flat(self):
        with pytest.raises(NoTransition):
            steepest_point_of_samples(np.linspace(1, 0, 100), np.full(100, 0.4))

    def test_rising_curve(self):
        thresholds = np.linspace(1.0, 0.0, 200)
        with pytest.raises(NoTransition):
            steepest_point_of_samples(thresholds, np.where(thresholds > 0.5, 1.0, 0.0))

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            steepest_point_of_samples(np.linspace(1, 0, 21), np.linspace(0, 1, 21))

    def test_even_window(self):
        thresholds, ratios = _logistic(0.3, 0.05)
        with pytest.raises(ValidationError, match="odd"):
            steepest_point_of_samples(thresholds, ratios, smoothing_window=10)

    def test_thresholds_must_descend(self):
        with pytest.raises(ValidationError, match="decreasing"):
            steepest_point_of_samples(np.linspace(0, 1, 50), np.linspace(1, 0, 50))

    def test_zero_width_window(self, monkeypatch):
        thresholds, ratios = _logistic(0.3, 0.05)
        monkeypatch.setattr(level_sets, "_crossing_right", lambda grid, s, start, level: float(grid[0]))
        with pytest.raises(NoTransition, match="no width"):
            steepest_point_of_samples(thresholds, ratios)

    def test_eigenvector_curve(self):
        g = generate_regular(400, 3, 8)
        pair = nearest_eigenpair(eigendecompose(g), 0.0)
        est = steepest_point(sweep_ratio_curve(g, pair.vector))
        assert est.window[0] <= est.alpha_c <= est.window[1]
        assert -3.0 < est.alpha_c < 3.0


class TestExperiments:

    def test_critical_curve_small(self):
        logger = RunLogger("critical-curve")
        rows = critical_curve_experiment(3, 60, 2, 8, 5, logger=logger)
        support = spectrum_support(3)
        assert rows
        centers = [r.lambda_bin_center for r in rows]
        assert centers == sorted(centers)
        for r in rows:
            assert support.lo < r.lambda_bin_center < support.hi
            assert math.isfinite(r.alpha_c_mean)
            assert r.count >= 1
        run = logger.finish()
        assert [t.task_id for t in run.tasks if t.kind == "realization"] == ["realization-0", "realization-1"]
        assert run.status == "completed"

    def test_deterministic(self):
        a = critical_curve_experiment(3, 40, 2, 4, 9)
        b = critical_curve_experiment(3, 40, 2, 4, 9)
        assert [(r.lambda_bin_center, r.alpha_c_mean, r.count) for r in a] == [
            (r.lambda_bin_center, r.alpha_c_mean, r.count) for r in b
        ]

    def test_realizations_positive(self):
        with pytest.raises(ValidationError):
            collect_threshold_samples(3, 40, 0, 1)

    def test_zero_width_window_skipped(self, monkeypatch):
        monkeypatch.setattr(level_sets, "_crossing_right", lambda grid, s, start, level: float(grid[0]))
        logger = RunLogger("critical-curve")
        assert collect_threshold_samples(3, 60, 1, 0, logger=logger) == []
        run = logger.finish()
        skipped = [t for t in run.tasks if t.kind == "steepest-point"]
        assert skipped
        assert any("no width" in t.error for t in skipped)
        assert run.status == "completed"

    def test_restart_policy_checked(self):
        with pytest.raises(ValidationError, match="restarts"):
            critical_curve_experiment(3, 40, 1, 4, 0, restarts="often")

    def test_scaled_restarts(self):
        a = critical_curve_experiment(3, 40, 1, 4, 2)
        b = critical_curve_experiment(3, 40, 1, 4, 2, restarts="scaled")
        # same seed, same draws while both budgets hold
        assert [r.alpha_c_mean for r in a] == [r.alpha_c_mean for r in b]

    def test_binning(self):
        samples = [
            ThresholdSample(0, 0, 1, -2.0, 1.0, 0.1),
            ThresholdSample(0, 1, 1, -1.9, 3.0, 0.1),
            ThresholdSample(0, 2, -1, 2.0, 0.5, 0.1),
        ]
        rows = bin_threshold_samples(samples, 3, 4)
        assert [r.count for r in rows] == [2, 1]
        assert rows[0].alpha_c_mean == 2.0
        assert rows[0].alpha_c_stderr == pytest.approx(1.0)
        assert math.isnan(rows[1].alpha_c_stderr)

    def test_binning_clamps_top_edge(self):
        edge = spectrum_support(3).hi
        rows = bin_threshold_samples([ThresholdSample(0, 0, 1, edge, 0.0, 0.1)], 3, 4)
        assert rows[0].lambda_bin_center == pytest.approx(edge - edge / 4)

    def test_critical_curve_csv(self, tmp_path):
        rows = bin_threshold_samples([ThresholdSample(0, 0, 1, 0.1, 0.7, 0.2)], 3, 2)
        header, body = read_csv(write_critical_curve_csv(3, rows, tmp_path / "c.csv"))
        assert header == ["d", "lambda_bin", "alpha_c_mean", "alpha_c_stderr", "count"]
        assert body[0][0] == "3"
        assert body[0][4] == "1"

    def test_sharpening_small(self, tmp_path):
        rows = sharpening_experiment(3, [60, 120], 2, 1)
        assert [r.n for r in rows] == [60, 120]
        assert all(r.mean_width > 0 for r in rows)
        header, _ = read_csv(write_sharpening_csv(3, rows, tmp_path / "s.csv"))
        assert header[:3] == ["d", "n", "mean_window_width"]

    def test_sharpening_samples_positive(self):
        with pytest.raises(ValidationError):
            sharpening_experiment(3, [40], 0, 1)

    @pytest.mark.slow
    def test_sharpening_with_n(self):
        rows = sharpening_experiment(3, [100, 250, 1000], 20, 0)
        widths = [r.mean_width for r in rows]
        assert widths[0] > widths[1] > widths[2]

    @pytest.mark.slow
    def test_critical_curve_minimum(self):
        rows = critical_curve_experiment(3, 1000, 10, 16, 0)
        best = min(rows, key=lambda r: r.alpha_c_mean)
        assert -0.8 <= best.lambda_bin_center <= -0.3
