"""Gaussian random waves on the d-regular tree.

The process has covariance phi(dist(u, v)) where phi is built from
Chebyshev polynomials of the second kind; almost every sample is an
eigenfunction of the tree adjacency with eigenvalue lambda. Sampling is
exact on finite balls through a pivoted Cholesky factor of the full ball
covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg, optimize, sparse, special

from .errors import (
    DegreeTooSmall,
    DomainError,
    NotPSD,
    OutsideSpectrum,
    TooLarge,
    ValidationError,
)
from .formats import CsvTarget, format_float, write_csv
from .logging import RunLogger
from .parallel import derive_seed, run_tasks

EDGE_SLACK = 1e-12
MAX_BALL_SIZE = 12288
PSD_TOL = 1e-10
SAMPLE_CHUNK = 4096
TAIL_CUTOFF = 1e-14


@dataclass(frozen=True)
class WaveModel:
    """Wave ensemble at eigenvalue ``lam`` on the ``d``-regular tree."""
    lam: float
    d: int

    def __post_init__(self):
        if self.d < 3:
            raise DegreeTooSmall(f"d must be at least 3 (got {self.d})", flag="--d")
        edge = 2.0 * math.sqrt(self.d - 1)
        if not abs(self.lam) <= edge * (1 + EDGE_SLACK):
            raise OutsideSpectrum(
                f"lambda={self.lam} lies outside [-{edge:.6g}, {edge:.6g}]", flag="--lambda"
            )

    @property
    def band_edge(self) -> float:
        return 2.0 * math.sqrt(self.d - 1)

    @property
    def chebyshev_argument(self) -> float:
        return min(1.0, max(-1.0, self.lam / self.band_edge))

    def describe(self) -> str:
        return f"lambda={format_float(self.lam)}, d={self.d}"


# ---------------------------------------------------------------------------
# Covariance kernel
# ---------------------------------------------------------------------------

def _check_chebyshev_argument(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1 + EDGE_SLACK):
        raise DomainError(f"Chebyshev argument outside [-1, 1]: {x!r}")
    return np.clip(x, -1.0, 1.0)


def chebyshev_u(k: int, x):
    """U_k(x) by the three-term recurrence; U_{-2} = -1, U_{-1} = 0."""
    if k < -2:
        raise ValidationError(f"Chebyshev index must be at least -2 (got {k})")
    x = _check_chebyshev_argument(x)
    if k == -2:
        out = -np.ones_like(x)
    else:
        prev, cur = np.zeros_like(x), np.ones_like(x)
        if k == -1:
            cur = prev
        for _ in range(k):
            prev, cur = cur, 2 * x * cur - prev
        out = cur
    return float(out) if out.ndim == 0 else out


def chebyshev_sequence(k_max: int, x: float) -> np.ndarray:
    """U_{-2}(x), ..., U_{k_max}(x); entry ``k + 2`` holds U_k."""
    x = float(_check_chebyshev_argument(x))
    us = np.empty(k_max + 3)
    us[0], us[1] = -1.0, 0.0
    for i in range(2, k_max + 3):
        us[i] = 2 * x * us[i - 1] - us[i - 2]
    return us


def phi(model: WaveModel, k: int) -> float:
    if k < 0:
        raise ValidationError(f"distance must be nonnegative (got {k})")
    x = model.chebyshev_argument
    q = model.d - 1
    return q ** (-k / 2) * (q / model.d * chebyshev_u(k, x) - chebyshev_u(k - 2, x) / model.d)


def phi_sequence(model: WaveModel, k_max: int) -> np.ndarray:
    """phi(0), ..., phi(k_max) from a single Chebyshev recurrence."""
    if k_max < 0:
        raise ValidationError(f"k_max must be nonnegative (got {k_max})", flag="--kmax")
    us = chebyshev_sequence(k_max, model.chebyshev_argument)
    q = model.d - 1
    k = np.arange(k_max + 1)
    return q ** (-k / 2) * (q / model.d * us[k + 2] - us[k] / model.d)


def covariance_matrix(model: WaveModel, distances) -> np.ndarray:
    distances = np.asarray(distances)
    if distances.size == 0:
        return np.zeros(distances.shape)
    return phi_sequence(model, int(distances.max()))[distances]


def _tail_bound(d: int, k: int) -> float:
    return (k + 1) * (d - 1) ** (-k / 2) * (1 + 1 / (d - 1))


def phi_total(model: WaveModel) -> float:
    """Phi = phi(0) + 2 * sum_{j>=1} |phi(j)|, with the geometric tail bound added."""
    k = 1
    while _tail_bound(model.d, k) >= TAIL_CUTOFF:
        k += 1
    seq = phi_sequence(model, k)
    return math.fsum([seq[0], *(2 * np.abs(seq[1:])).tolist(), _tail_bound(model.d, k)])


# ---------------------------------------------------------------------------
# Analytic bounds
# ---------------------------------------------------------------------------

def gaussian_tail(alpha):
    """Standard normal upper tail Q(alpha)."""
    out = special.ndtr(-np.asarray(alpha, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def subcritical_bound(model: WaveModel) -> float:
    """Level above which every level set is finite: sqrt(2 Phi ln(d-1))."""
    return math.sqrt(2 * phi_total(model) * math.log(model.d - 1))


def supercritical_bound(d: int) -> float:
    """The alpha with Q(alpha) = d / (2(d-1)); below it an infinite set exists."""
    if d < 3:
        raise DegreeTooSmall(f"d must be at least 3 (got {d})", flag="--d")
    target = d / (2 * (d - 1))
    return float(optimize.bisect(lambda a: gaussian_tail(a) - target, -10.0, 0.0, xtol=1e-12))


def path_sum_variance(model: WaveModel, k: int) -> float:
    """Variance of the sum of the process over a k-vertex path."""
    if k < 1:
        raise ValidationError(f"path length must be positive (got {k})")
    seq = phi_sequence(model, k - 1)
    j = np.arange(1, k)
    return math.fsum([k * seq[0], *(2 * (k - j) * seq[1:]).tolist()])


def path_sum_tail_bound(model: WaveModel, k: int, alpha: float) -> tuple[float, float]:
    """Bounds on P(sum over a k-path > k*alpha): Q(k alpha / sqrt(k Phi)) and exp(-alpha^2 k / 2 Phi)."""
    if k < 1:
        raise ValidationError(f"path length must be positive (got {k})")
    total = phi_total(model)
    return (
        gaussian_tail(k * alpha / math.sqrt(k * total)),
        math.exp(-alpha * alpha * k / (2 * total)),
    )


# ---------------------------------------------------------------------------
# Tree balls and exact sampling
# ---------------------------------------------------------------------------

def ball_size(d: int, radius: int) -> int:
    if radius == 0:
        return 1
    return 1 + d * ((d - 1) ** radius - 1) // (d - 2)


@dataclass(frozen=True, eq=False)
class TreeBall:
    """Ball of the d-regular tree around a root, vertices in BFS creation order.

    Children of a vertex are contiguous starting at ``first_child[v]``
    (-1 for vertices on the boundary sphere).
    """
    d: int
    radius: int
    parent: np.ndarray
    depth: np.ndarray
    first_child: np.ndarray

    @classmethod
    def build(cls, d: int, radius: int) -> TreeBall:
        if d < 3:
            raise DegreeTooSmall(f"d must be at least 3 (got {d})", flag="--d")
        if radius < 0:
            raise ValidationError(f"radius must be nonnegative (got {radius})", flag="--radius")
        size = ball_size(d, radius)
        if size > MAX_BALL_SIZE:
            raise TooLarge(f"ball of radius {radius} has {size} vertices (cap {MAX_BALL_SIZE})", flag="--radius")
        parent = np.full(size, -1, dtype=np.int64)
        depth = np.zeros(size, dtype=np.int64)
        first_child = np.full(size, -1, dtype=np.int64)
        nxt = 1
        for v in range(size):
            if depth[v] == radius:
                continue
            count = d if v == 0 else d - 1
            first_child[v] = nxt
            parent[nxt:nxt + count] = v
            depth[nxt:nxt + count] = depth[v] + 1
            nxt += count
        return cls(d=d, radius=radius, parent=parent, depth=depth, first_child=first_child)

    @property
    def size(self) -> int:
        return int(self.parent.size)

    def sphere_sizes(self) -> np.ndarray:
        return np.bincount(self.depth, minlength=self.radius + 1)

    def children(self, v: int) -> range:
        start = int(self.first_child[v])
        if start < 0:
            return range(0)
        return range(start, start + (self.d if v == 0 else self.d - 1))

    def neighbors(self, v: int) -> list[int]:
        out = [] if v == 0 else [int(self.parent[v])]
        out.extend(self.children(v))
        return out

    def interior(self) -> np.ndarray:
        """Vertices of depth at most radius - 1 (all their tree neighbors are in the ball)."""
        return np.flatnonzero(self.depth < self.radius)

    def adjacency(self) -> sparse.csr_matrix:
        child = np.arange(1, self.size)
        rows = np.concatenate([child, self.parent[1:]])
        cols = np.concatenate([self.parent[1:], child])
        data = np.ones(rows.size, dtype=np.float64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.size, self.size))

    def distance_matrix(self) -> np.ndarray:
        """Tree distances depth(u) + depth(v) - 2 depth(lca(u, v))."""
        ancestors = np.full((self.size, self.radius + 1), -1, dtype=np.int64)
        for v in range(self.size):
            ancestors[v, self.depth[v]] = v
            if v:
                p = self.parent[v]
                ancestors[v, : self.depth[p] + 1] = ancestors[p, : self.depth[p] + 1]
        shared = np.zeros((self.size, self.size), dtype=np.int16)
        for level in range(self.radius + 1):
            col = ancestors[:, level]
            present = col >= 0
            shared += (col[:, None] == col[None, :]) & present[:, None]
        lca_depth = shared.astype(np.int64) - 1
        return self.depth[:, None] + self.depth[None, :] - 2 * lca_depth


def psd_factor(cov, tol: float = PSD_TOL) -> tuple[np.ndarray, int]:
    """Pivoted Cholesky: F with F @ F.T == cov up to ``tol`` on the dropped block.

    Returns (F, rank); F has shape (n, rank).
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValidationError("covariance must be a square matrix")
    n = cov.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0
    (pstrf,) = linalg.get_lapack_funcs(("pstrf",), (cov,))
    c, piv, rank, info = pstrf(cov, tol=tol, lower=1)
    if info < 0:
        raise NotPSD(f"pivoted Cholesky rejected argument {-info}")
    factor = np.zeros((n, rank))
    factor[piv - 1, :] = np.tril(c)[:, :rank]
    leftover = np.diag(cov) - np.einsum("ij,ij->i", factor, factor)
    if leftover.min() < -1e-8:
        raise NotPSD(f"covariance is indefinite (Schur diagonal {leftover.min():.3e})")
    return factor, int(rank)


@dataclass(frozen=True, eq=False)
class WaveSampleBatch:
    """``values[s, v]`` is sample s at ball vertex v."""
    ball: TreeBall
    values: np.ndarray
    lam: float
    d: int
    seed: int

    @property
    def count(self) -> int:
        return int(self.values.shape[0])

    def eigen_residuals(self) -> np.ndarray:
        """|sum_{u~v} psi(u) - lambda psi(v)| at interior vertices, per sample."""
        interior = self.ball.interior()
        adj = self.ball.adjacency()[interior]
        sums = (adj @ self.values.T).T
        return np.abs(sums - self.lam * self.values[:, interior])

    def empirical_covariance(self) -> np.ndarray:
        return self.values.T @ self.values / self.count


def _sample_chunk(args: tuple) -> np.ndarray:
    factor, rows, seed = args
    rng = np.random.default_rng(seed)
    return rng.standard_normal((rows, factor.shape[1])) @ factor.T


def sample_ball(
    model: WaveModel,
    radius: int,
    count: int,
    seed: int,
    *,
    workers: int = 1,
    logger: RunLogger | None = None,
) -> WaveSampleBatch:
    """Exact samples of the wave on a ball; chunk c draws from derive_seed(seed, c)."""
    if count < 1:
        raise ValidationError(f"count must be positive (got {count})", flag="--count")
    ball = TreeBall.build(model.d, radius)
    factor, _ = psd_factor(covariance_matrix(model, ball.distance_matrix()))
    tasks = [
        (factor, min(SAMPLE_CHUNK, count - start), derive_seed(seed, c))
        for c, start in enumerate(range(0, count, SAMPLE_CHUNK))
    ]
    chunks = run_tasks(_sample_chunk, tasks, workers=workers, logger=logger, kind="sample-chunk")
    return WaveSampleBatch(ball=ball, values=np.vstack(chunks), lam=model.lam, d=model.d, seed=seed)


def write_phi_csv(model: WaveModel, k_max: int, path: CsvTarget) -> Path | None:
    return write_csv(path, ["k", "phi"], enumerate(phi_sequence(model, k_max).tolist()))


def sample_preamble(batch: WaveSampleBatch) -> str:
    return (
        f"# d={batch.d},lambda={format_float(batch.lam)},"
        f"radius={batch.ball.radius},seed={batch.seed}"
    )


def write_sample_csv(batch: WaveSampleBatch, path: CsvTarget) -> Path | None:
    header = [f"v{i}" for i in range(batch.ball.size)]
    return write_csv(path, header, batch.values.tolist(), preamble=sample_preamble(batch))
