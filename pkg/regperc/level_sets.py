"""Level-set ratio curves and the steepest-point threshold estimator.

For a function f on the vertices of a graph, the induced graph at level
alpha keeps the vertices with f(v) > alpha (strict). The ratio curve maps
alpha to |largest component| / |induced graph|; it is computed exactly at
every distinct value of f by one descending union-find sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.sparse import csgraph

from .errors import (
    LengthMismatch,
    NoTransition,
    TooFewPoints,
    ValidationError,
)
from .formats import CsvTarget, write_csv
from .logging import RunLogger
from .parallel import derive_seed, run_tasks
from .regular_graph import Graph, generate_regular
from .spectral import eigendecompose, nearest_eigenpair, spectrum_support

DEFAULT_WINDOW = 11
GRID_POINTS = 512
UPPER_LEVEL = 0.8
LOWER_LEVEL = 0.2
MIN_TOTAL_VARIATION = 0.5


@dataclass(frozen=True, eq=False)
class RatioCurve:
    """Exact piecewise-constant ratio curve.

    Entry i describes the induced graph for alpha just below
    ``thresholds[i]``; thresholds are the distinct values of f, descending.
    """
    thresholds: np.ndarray
    induced_sizes: np.ndarray
    max_component_sizes: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.max_component_sizes / self.induced_sizes

    def __len__(self) -> int:
        return int(self.thresholds.size)


@dataclass(frozen=True)
class ThresholdEstimate:
    """Steepest point of a smoothed ratio curve.

    ``window`` is (alpha where the smoothed ratio falls through 0.8,
    alpha where it falls through 0.2); the first is the smaller alpha.
    """
    alpha_c: float
    window: tuple[float, float]
    n_points: int

    @property
    def width(self) -> float:
        return self.window[1] - self.window[0]


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def sweep_ratio_curve(g: Graph, f) -> RatioCurve:
    """Insert vertices by decreasing f (ties by id) into a union-find.

    Only already-inserted neighbors are merged; component sizes and the
    running maximum are tracked, giving the exact curve in
    O(n log n + (n + m) alpha(n)).
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.n,):
        raise LengthMismatch(f"function has {f.size} values, graph has {g.n} vertices")
    n = g.n
    order = np.lexsort((np.arange(n), -f)).tolist()
    values = f[order].tolist()
    adj = g.neighbor_lists()

    parent = list(range(n))
    size = [1] * n
    inserted = [False] * n
    biggest = 0
    thresholds: list[float] = []
    induced: list[int] = []
    largest: list[int] = []

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for pos, v in enumerate(order):
        inserted[v] = True
        root = v
        for u in adj[v]:
            if not inserted[u]:
                continue
            ru = find(u)
            if ru == root:
                continue
            if size[ru] > size[root]:
                ru, root = root, ru
            parent[ru] = root
            size[root] += size[ru]
        if size[root] > biggest:
            biggest = size[root]
        if pos == n - 1 or values[pos + 1] != values[pos]:
            thresholds.append(values[pos])
            induced.append(pos + 1)
            largest.append(biggest)

    return RatioCurve(
        thresholds=np.array(thresholds, dtype=np.float64),
        induced_sizes=np.array(induced, dtype=np.int64),
        max_component_sizes=np.array(largest, dtype=np.int64),
    )


def ratio_at(curve: RatioCurve, alpha: float) -> float:
    """Ratio after inserting every vertex with f(v) > alpha; 0 if none."""
    k = int(np.searchsorted(-curve.thresholds, -alpha, side="left"))
    if k == 0:
        return 0.0
    return float(curve.max_component_sizes[k - 1] / curve.induced_sizes[k - 1])


def brute_force_ratio(g: Graph, f, alpha: float) -> tuple[int, int]:
    """(|induced graph|, |largest component|) by rebuilding the induced graph."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.n,):
        raise LengthMismatch(f"function has {f.size} values, graph has {g.n} vertices")
    keep = np.flatnonzero(f > alpha)
    if keep.size == 0:
        return 0, 0
    sub = g.csr()[keep][:, keep]
    _, labels = csgraph.connected_components(sub, directed=False)
    return int(keep.size), int(np.bincount(labels).max())


def write_curve_csv(curve: RatioCurve, path: CsvTarget) -> Path | None:
    rows = zip(
        curve.thresholds.tolist(),
        curve.induced_sizes.tolist(),
        curve.max_component_sizes.tolist(),
        curve.ratios.tolist(),
    )
    return write_csv(path, ["alpha", "induced", "max_component", "ratio"], rows)


def write_curves_csv(curves: Sequence[tuple[int, float, RatioCurve]], path: CsvTarget) -> Path | None:
    """Several ratio curves in long form, keyed by (eigenvector index, eigenvalue)."""
    rows = [
        (index, lam, *point)
        for index, lam, curve in curves
        for point in zip(
            curve.thresholds.tolist(),
            curve.induced_sizes.tolist(),
            curve.max_component_sizes.tolist(),
            curve.ratios.tolist(),
        )
    ]
    return write_csv(path, ["index", "lambda", "alpha", "induced", "max_component", "ratio"], rows)


# ---------------------------------------------------------------------------
# Steepest point
# ---------------------------------------------------------------------------

def steepest_point(curve: RatioCurve, smoothing_window: int = DEFAULT_WINDOW) -> ThresholdEstimate:
    return steepest_point_of_samples(curve.thresholds, curve.ratios, smoothing_window)


def steepest_point_of_samples(
    thresholds: Sequence[float],
    ratios: Sequence[float],
    smoothing_window: int = DEFAULT_WINDOW,
    grid_points: int = GRID_POINTS,
) -> ThresholdEstimate:
    """Locate the steepest descent of a resampled, smoothed ratio curve.

    ``ratios[i]`` holds for alpha just below ``thresholds[i]`` (strictly
    decreasing). The curve is read on a uniform grid over
    [min threshold, max threshold]; the top grid point sees the top sample.
    """
    thr = np.asarray(thresholds, dtype=np.float64)
    rat = np.asarray(ratios, dtype=np.float64)
    if smoothing_window < 1 or smoothing_window % 2 == 0:
        raise ValidationError("smoothing window must be a positive odd integer", flag="--window")
    if thr.shape != rat.shape:
        raise LengthMismatch("thresholds and ratios differ in length")
    if thr.size < 2 * smoothing_window:
        raise TooFewPoints(
            f"curve has {thr.size} points, needs at least {2 * smoothing_window}"
        )
    if np.any(np.diff(thr) >= 0):
        raise ValidationError("thresholds must be strictly decreasing")

    grid = np.linspace(thr[-1], thr[0], grid_points)
    k = np.searchsorted(-thr, -grid, side="left")
    raw = rat[np.maximum(k, 1) - 1]
    smooth = uniform_filter1d(raw, size=smoothing_window, mode="nearest")

    if float(np.abs(np.diff(smooth)).sum()) < MIN_TOTAL_VARIATION:
        raise NoTransition("ratio curve is flat")
    slope = np.gradient(smooth, grid)
    i0 = int(np.argmin(slope))
    if slope[i0] >= 0:
        raise NoTransition("ratio curve never descends")

    # a linear ramp has a plateau of equal slopes; take its middle
    tied = np.isclose(slope, slope[i0], rtol=1e-9, atol=1e-12)
    left = i0
    while left > 0 and tied[left - 1]:
        left -= 1
    right = i0
    while right < grid_points - 1 and tied[right + 1]:
        right += 1
    alpha_c = 0.5 * (grid[left] + grid[right])

    upper = _crossing_left(grid, smooth, i0, UPPER_LEVEL)
    lower = _crossing_right(grid, smooth, i0, LOWER_LEVEL)
    if lower <= upper:
        raise NoTransition("descent window has no width")
    return ThresholdEstimate(alpha_c=float(alpha_c), window=(float(upper), float(lower)), n_points=int(thr.size))


def _crossing_left(grid: np.ndarray, s: np.ndarray, start: int, level: float) -> float:
    j = start
    while j > 0 and s[j] < level:
        j -= 1
    if s[j] < level:
        return float(grid[0])
    if j == start:
        return float(grid[j])
    return float(grid[j] + (grid[j + 1] - grid[j]) * (s[j] - level) / (s[j] - s[j + 1]))


def _crossing_right(grid: np.ndarray, s: np.ndarray, start: int, level: float) -> float:
    j = start
    while j < grid.size - 1 and s[j] > level:
        j += 1
    if s[j] > level:
        return float(grid[-1])
    if j == start:
        return float(grid[j])
    return float(grid[j - 1] + (grid[j] - grid[j - 1]) * (s[j - 1] - level) / (s[j - 1] - s[j]))


# ---------------------------------------------------------------------------
# Ensemble experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalCurveRow:
    lambda_bin_center: float
    alpha_c_mean: float
    alpha_c_stderr: float
    count: int


@dataclass(frozen=True)
class ThresholdSample:
    """One steepest-point estimate from one signed eigenvector."""
    realization: int
    index: int
    sign: int
    eigenvalue: float
    alpha_c: float
    width: float


def _signed_estimates(g: Graph, vector: np.ndarray, window: int) -> list[tuple[int, ThresholdEstimate | str]]:
    out: list[tuple[int, ThresholdEstimate | str]] = []
    for sign in (1, -1):
        try:
            out.append((sign, steepest_point(sweep_ratio_curve(g, sign * vector), window)))
        except (NoTransition, TooFewPoints) as e:
            out.append((sign, str(e)))
    return out


def _critical_curve_task(args: tuple) -> tuple[list[ThresholdSample], list[str]]:
    realization, n, d, seed, window, generator, restarts = args
    g = generate_regular(n, d, seed, method=generator, max_restarts=restarts)
    support = spectrum_support(d)
    samples: list[ThresholdSample] = []
    skipped: list[str] = []
    for i, pair in enumerate(eigendecompose(g)):
        if not support.contains(pair.eigenvalue, strict=True):
            continue
        for sign, est in _signed_estimates(g, pair.vector, window):
            if isinstance(est, str):
                skipped.append(f"r{realization}/e{i}/{'+' if sign > 0 else '-'}: {est}")
                continue
            samples.append(ThresholdSample(realization, i, sign, pair.eigenvalue, est.alpha_c, est.width))
    return samples, skipped


def collect_threshold_samples(
    d: int,
    n: int,
    realizations: int,
    seed: int,
    *,
    smoothing_window: int = DEFAULT_WINDOW,
    generator: str = "pairing",
    restarts: int | str = "fixed",
    workers: int = 1,
    logger: RunLogger | None = None,
) -> list[ThresholdSample]:
    """Steepest points of +f and -f for every in-band eigenvector of every graph."""
    if realizations < 1:
        raise ValidationError("realizations must be positive", flag="--realizations")
    tasks = [
        (r, n, d, derive_seed(seed, r), smoothing_window, generator, restarts)
        for r in range(realizations)
    ]
    results = run_tasks(
        _critical_curve_task, tasks, workers=workers, logger=logger,
        kind="realization", label=lambda i, t: f"realization-{i}",
    )
    samples: list[ThresholdSample] = []
    for found, skipped in results:
        samples.extend(found)
        if logger is not None:
            for reason in skipped:
                logger.skip_task(f"sample-{reason.split(':')[0]}", "steepest-point", reason)
    return samples


def bin_threshold_samples(samples: Sequence[ThresholdSample], d: int, lambda_bins: int) -> list[CriticalCurveRow]:
    """Per-bin mean and standard error over equal-width bins of the support."""
    if lambda_bins < 1:
        raise ValidationError("lambda_bins must be positive", flag="--lambda-bins")
    support = spectrum_support(d)
    width = support.width / lambda_bins
    groups: list[list[float]] = [[] for _ in range(lambda_bins)]
    for s in samples:
        b = min(int((s.eigenvalue - support.lo) / width), lambda_bins - 1)
        groups[b].append(s.alpha_c)
    rows = []
    for b, values in enumerate(groups):
        if not values:
            continue
        arr = np.array(values)
        stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
        rows.append(CriticalCurveRow(
            lambda_bin_center=support.lo + (b + 0.5) * width,
            alpha_c_mean=math.fsum(values) / len(values),
            alpha_c_stderr=stderr,
            count=len(values),
        ))
    return rows


def critical_curve_experiment(
    d: int,
    n: int,
    realizations: int,
    lambda_bins: int,
    seed: int,
    *,
    smoothing_window: int = DEFAULT_WINDOW,
    generator: str = "pairing",
    restarts: int | str = "fixed",
    workers: int = 1,
    logger: RunLogger | None = None,
) -> list[CriticalCurveRow]:
    """Empirical alpha_c(lambda, d) binned over the tree spectrum."""
    samples = collect_threshold_samples(
        d, n, realizations, seed,
        smoothing_window=smoothing_window, generator=generator, restarts=restarts,
        workers=workers, logger=logger,
    )
    return bin_threshold_samples(samples, d, lambda_bins)


def write_critical_curve_csv(d: int, rows: Sequence[CriticalCurveRow], path: CsvTarget) -> Path | None:
    return write_csv(
        path,
        ["d", "lambda_bin", "alpha_c_mean", "alpha_c_stderr", "count"],
        [(d, r.lambda_bin_center, r.alpha_c_mean, r.alpha_c_stderr, r.count) for r in rows],
    )


@dataclass(frozen=True)
class SharpeningRow:
    n: int
    mean_width: float
    stderr: float
    mean_alpha_c: float
    count: int


def _sharpening_task(args: tuple) -> list[ThresholdEstimate]:
    n, d, seed, target, window, generator, restarts = args
    g = generate_regular(n, d, seed, method=generator, max_restarts=restarts)
    pair = nearest_eigenpair(eigendecompose(g), target)
    return [est for _, est in _signed_estimates(g, pair.vector, window) if not isinstance(est, str)]


def sharpening_experiment(
    d: int,
    sizes: Sequence[int],
    samples: int,
    seed: int,
    *,
    target_lambda: float = 0.0,
    smoothing_window: int = DEFAULT_WINDOW,
    generator: str = "pairing",
    restarts: int | str = "fixed",
    workers: int = 1,
    logger: RunLogger | None = None,
) -> list[SharpeningRow]:
    """Descent-window width versus n for the eigenvector nearest a target."""
    if samples < 1:
        raise ValidationError("samples must be positive", flag="--samples")
    tasks = [
        (n, d, derive_seed(seed, j * samples + s), target_lambda, smoothing_window, generator, restarts)
        for j, n in enumerate(sizes)
        for s in range(samples)
    ]
    results = run_tasks(
        _sharpening_task, tasks, workers=workers, logger=logger,
        kind="sharpening", label=lambda i, t: f"n{t[0]}-sample-{i % samples}",
    )
    rows = []
    for j, n in enumerate(sizes):
        ests = [e for chunk in results[j * samples:(j + 1) * samples] for e in chunk]
        if not ests:
            continue
        widths = np.array([e.width for e in ests])
        stderr = float(widths.std(ddof=1) / math.sqrt(widths.size)) if widths.size > 1 else math.nan
        rows.append(SharpeningRow(
            n=int(n),
            mean_width=math.fsum(widths.tolist()) / widths.size,
            stderr=stderr,
            mean_alpha_c=math.fsum(e.alpha_c for e in ests) / len(ests),
            count=len(ests),
        ))
    return rows


def write_sharpening_csv(d: int, rows: Sequence[SharpeningRow], path: CsvTarget) -> Path | None:
    return write_csv(
        path,
        ["d", "n", "mean_window_width", "window_width_stderr", "mean_alpha_c", "count"],
        [(d, r.n, r.mean_width, r.stderr, r.mean_alpha_c, r.count) for r in rows],
    )
