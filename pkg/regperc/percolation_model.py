"""Level-set percolation of the wave model on the tree.

Along a tree path the process is second-order Markov: given the two
previous values (u, v) the next one is normal with mean a*u + b*v and
variance sigma2. The probability P_k that a path of k edges stays above
alpha therefore grows like r(alpha)^k, where r is the leading eigenvalue
of the survival transfer operator, and the critical level solves
r(alpha_c) = 1/(d-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy import linalg, optimize
from scipy.sparse import linalg as sparse_linalg

from .errors import (
    BracketFailure,
    DegenerateKernel,
    NoConvergence,
    NonMonotoneGrowth,
    OutsideSpectrum,
    TooLarge,
    TruncationTooTight,
    ValidationError,
)
from .formats import CsvTarget, write_csv
from .gaussian_wave import (
    WaveModel,
    gaussian_tail,
    phi_sequence,
    psd_factor,
    subcritical_bound,
    supercritical_bound,
)
from .logging import RunLogger
from .parallel import run_tasks

DEFAULT_QUAD_NODES = 128
DEFAULT_TRUNCATION = 8.0
DEFAULT_TOL = 1e-3
BRACKET_MARGIN = 0.01
MAX_PATH_EDGES = 32
MC_CHUNK = 100_000
EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 10_000
EIGEN_NCV = 24
EIGEN_IMAG_TOL = 1e-8
TAIL_TOL = 1e-10
MAX_EXTENSIONS = 3
EXTENSION_FACTOR = 1.5
MONOTONE_SLACK = 1e-9
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class PathKernel:
    """Regression of X_2 on (X_0, X_1) along a path: X_2 = a X_0 + b X_1 + noise."""
    a: float
    b: float
    sigma2: float
    phi1: float
    phi2: float

    def normal_equation_residuals(self) -> tuple[float, float]:
        return (
            abs(self.a + self.b * self.phi1 - self.phi2),
            abs(self.a * self.phi1 + self.b - self.phi1),
        )


def path_kernel(model: WaveModel) -> PathKernel:
    _, phi1, phi2 = phi_sequence(model, 2).tolist()
    det = 1.0 - phi1 * phi1
    if det <= 1e-12:
        raise DegenerateKernel(f"|phi(1)| = {abs(phi1):.6g} leaves no conditional variance")
    a = (phi2 - phi1 * phi1) / det
    b = phi1 * (1.0 - phi2) / det
    sigma2 = 1.0 - a * phi2 - b * phi1
    if sigma2 <= 1e-12:
        raise DegenerateKernel(f"conditional variance {sigma2:.3e} is not positive ({model.describe()})")
    return PathKernel(a=a, b=b, sigma2=sigma2, phi1=phi1, phi2=phi2)


# ---------------------------------------------------------------------------
# Transfer operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransferKernel:
    """Survival operator discretized on Gauss-Legendre nodes of [alpha, alpha + T].

    ``matrix[i, j, l]`` = w_l * N(x_l; a x_i + b x_j, sigma2); applying it to
    F(v, w) gives (TF)(u, v) = sum_l matrix[u, v, l] F(v, l).
    """
    alpha: float
    truncation: float
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    path: PathKernel

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("ijl,jl->ij", self.matrix, values)

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=2)

    def pair_weights(self) -> np.ndarray:
        """Quadrature weights times the joint density of (X_0, X_1) on the node grid."""
        p = self.path.phi1
        u = self.nodes[:, None]
        v = self.nodes[None, :]
        det = 1.0 - p * p
        dens = np.exp(-(u * u - 2 * p * u * v + v * v) / (2 * det)) / (2 * math.pi * math.sqrt(det))
        return self.weights[:, None] * self.weights[None, :] * dens


def transfer_kernel(
    model: WaveModel,
    alpha: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
) -> TransferKernel:
    if quad_nodes < 32:
        raise ValidationError(f"quad_nodes must be at least 32 (got {quad_nodes})", flag="--quad-nodes")
    if truncation < 6:
        raise ValidationError(f"truncation must be at least 6 (got {truncation})", flag="--truncation")
    pk = path_kernel(model)
    ref, w = np.polynomial.legendre.leggauss(quad_nodes)
    nodes = alpha + 0.5 * truncation * (ref + 1.0)
    weights = 0.5 * truncation * w
    mean = pk.a * nodes[:, None, None] + pk.b * nodes[None, :, None]
    # built in place: the tensor has quad_nodes**3 entries
    matrix = nodes[None, None, :] - mean
    np.square(matrix, out=matrix)
    matrix *= -0.5 / pk.sigma2
    np.exp(matrix, out=matrix)
    matrix *= weights[None, None, :] / math.sqrt(2 * math.pi * pk.sigma2)
    return TransferKernel(
        alpha=float(alpha), truncation=float(truncation),
        nodes=nodes, weights=weights, matrix=matrix, path=pk,
    )


def truncation_tail(model: WaveModel, alpha: float, quad_nodes: int, truncation: float) -> float:
    """Largest probability mass cut off above alpha + T, over node pairs and the marginal."""
    pk = path_kernel(model)
    ref, _ = np.polynomial.legendre.leggauss(quad_nodes)
    nodes = alpha + 0.5 * truncation * (ref + 1.0)
    u = nodes[:, None]
    v = nodes[None, :]
    top = alpha + truncation
    cond = gaussian_tail((top - (pk.a * u + pk.b * v)) / math.sqrt(pk.sigma2))
    det = 1.0 - pk.phi1 ** 2
    pair = np.exp(-(u * u - 2 * pk.phi1 * u * v + v * v) / (2 * det))
    return max(float((cond * pair).max()), gaussian_tail(top))


def _fit_truncation(model: WaveModel, alpha: float, quad_nodes: int, truncation: float) -> float:
    t = truncation
    for _ in range(MAX_EXTENSIONS + 1):
        if truncation_tail(model, alpha, quad_nodes, t) <= TAIL_TOL:
            return t
        t *= EXTENSION_FACTOR
    raise TruncationTooTight(
        f"tail mass above alpha+T exceeds {TAIL_TOL:g} after {MAX_EXTENSIONS} extensions "
        f"(alpha={alpha}, T={truncation})",
        flag="--truncation",
    )


@dataclass(frozen=True)
class GrowthRate:
    rate: float
    iterations: int
    truncation: float


def growth_rate_detail(
    model: WaveModel,
    alpha: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
) -> GrowthRate:
    """Perron eigenvalue of the transfer operator.

    The square of the operator is entrywise positive, so the leading
    eigenvalue is real, simple and strictly dominant. Arnoldi iteration
    (ARPACK) on the operator as a matrix-free map of the N*N grid finds it
    from the all-ones start vector; ``iterations`` counts operator
    applications.
    """
    t = _fit_truncation(model, alpha, quad_nodes, truncation)
    kernel = transfer_kernel(model, alpha, quad_nodes, t)
    shape = (quad_nodes, quad_nodes)
    size = quad_nodes * quad_nodes
    start = np.ones(size)
    if not kernel.apply(start.reshape(shape)).any():
        return GrowthRate(rate=0.0, iterations=1, truncation=t)

    applications = 0

    def matvec(x: np.ndarray) -> np.ndarray:
        nonlocal applications
        applications += 1
        return kernel.apply(np.asarray(x, dtype=np.float64).reshape(shape)).ravel()

    op = sparse_linalg.LinearOperator((size, size), matvec=matvec, dtype=np.float64)
    try:
        values = sparse_linalg.eigs(
            op, k=1, which="LM", v0=start, ncv=EIGEN_NCV, tol=EIGEN_TOL, maxiter=EIGEN_MAX_ITER,
            return_eigenvectors=False,
        )
    except sparse_linalg.ArpackNoConvergence as e:
        raise NoConvergence(
            f"leading eigenvalue did not settle in {EIGEN_MAX_ITER} restarts (alpha={alpha})"
        ) from e
    value = complex(values[0])
    if value.real < 0 or abs(value.imag) > EIGEN_IMAG_TOL * max(abs(value), 1e-300):
        raise NoConvergence(f"leading eigenvalue {value} is not a Perron root (alpha={alpha})")
    return GrowthRate(rate=float(value.real), iterations=applications, truncation=t)


def growth_rate(
    model: WaveModel,
    alpha: float,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
) -> float:
    return growth_rate_detail(model, alpha, quad_nodes, truncation).rate


def path_probabilities(
    model: WaveModel,
    alpha: float,
    k_max: int,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
) -> np.ndarray:
    """P_0, ..., P_{k_max} from the iterated discretized kernel; P_0 is exact."""
    if k_max < 0:
        raise ValidationError(f"k_max must be nonnegative (got {k_max})")
    t = _fit_truncation(model, alpha, quad_nodes, truncation)
    kernel = transfer_kernel(model, alpha, quad_nodes, t)
    pair = kernel.pair_weights()
    out = [gaussian_tail(alpha)]
    g = np.ones((quad_nodes, quad_nodes))
    for _ in range(k_max):
        out.append(float((pair * g).sum()))
        g = kernel.apply(g)
    return np.array(out)


# ---------------------------------------------------------------------------
# Critical level
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalResult:
    alpha_c: float
    r_residual: float
    quad_nodes: int
    truncation: float
    iterations: int
    bracket: tuple[float, float]


def analytic_bracket(model: WaveModel) -> tuple[float, float]:
    return (
        supercritical_bound(model.d) - BRACKET_MARGIN,
        subcritical_bound(model) + BRACKET_MARGIN,
    )


def critical_alpha(
    model: WaveModel,
    tol: float = DEFAULT_TOL,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
) -> CriticalResult:
    """Solve r(alpha) = 1/(d-1) on the analytic bracket.

    Bisection to width ``tol`` checks that r never increases with alpha;
    a Brent polish on the final interval drives the residual down.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be positive (got {tol})", flag="--tol")
    target = 1.0 / (model.d - 1)
    rates_at: dict[float, float] = {}
    evals = 0

    def r(alpha: float) -> float:
        nonlocal evals
        if alpha not in rates_at:
            evals += 1
            rates_at[alpha] = growth_rate(model, alpha, quad_nodes, truncation)
            _check_monotone(rates_at)
        return rates_at[alpha]

    lo, hi = analytic_bracket(model)
    if not (r(lo) > target > r(hi)):
        raise BracketFailure(
            f"r does not straddle {target:.6g} on [{lo:.6g}, {hi:.6g}] "
            f"(r={rates_at[lo]:.6g}, {rates_at[hi]:.6g}; {model.describe()})"
        )
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if r(mid) > target:
            a = mid
        else:
            b = mid
    root = optimize.brentq(lambda x: r(x) - target, a, b, xtol=1e-12, rtol=1e-12)
    residual = abs(r(root) - target)
    if residual > RESIDUAL_TOL:
        raise NoConvergence(f"critical level residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    return CriticalResult(
        alpha_c=float(root),
        r_residual=residual,
        quad_nodes=quad_nodes,
        truncation=_fit_truncation(model, root, quad_nodes, truncation),
        iterations=evals,
        bracket=(lo, hi),
    )


def _check_monotone(rates_at: dict[float, float]) -> None:
    alphas = sorted(rates_at)
    rates = [rates_at[a] for a in alphas]
    for i in range(1, len(rates)):
        if rates[i] > rates[i - 1] * (1 + MONOTONE_SLACK) + MONOTONE_SLACK:
            raise NonMonotoneGrowth(
                f"r increases from {rates[i - 1]:.12g} at alpha={alphas[i - 1]:.6g} "
                f"to {rates[i]:.12g} at alpha={alphas[i]:.6g}"
            )


def scan_growth(
    model: WaveModel,
    alphas: Sequence[float],
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
) -> np.ndarray:
    """r on a grid of levels, asserting it is nonincreasing."""
    rates = np.array([growth_rate(model, a, quad_nodes, truncation) for a in alphas])
    _check_monotone(dict(zip(map(float, alphas), rates.tolist())))
    return rates


@dataclass(frozen=True)
class ModelCurveRow:
    lam: float
    alpha_c: float
    r_residual: float
    quad_nodes: int
    truncation: float


def _model_curve_task(args: tuple) -> ModelCurveRow:
    lam, d, tol, quad_nodes, truncation = args
    res = critical_alpha(WaveModel(lam, d), tol, quad_nodes, truncation)
    return ModelCurveRow(lam, res.alpha_c, res.r_residual, quad_nodes, res.truncation)


def model_curve(
    d: int,
    lambda_grid: Sequence[float],
    *,
    tol: float = DEFAULT_TOL,
    quad_nodes: int = DEFAULT_QUAD_NODES,
    truncation: float = DEFAULT_TRUNCATION,
    workers: int = 1,
    logger: RunLogger | None = None,
) -> list[ModelCurveRow]:
    """alpha_c(lambda, d) for every grid point strictly inside the spectrum."""
    edge = WaveModel(0.0, d).band_edge
    if not lambda_grid:
        raise ValidationError("lambda grid is empty", flag="--lambda-grid")
    for lam in lambda_grid:
        if not -edge < lam < edge:
            raise OutsideSpectrum(
                f"grid point {lam} not inside (-{edge:.6g}, {edge:.6g})", flag="--lambda-grid"
            )
    tasks = [(float(lam), d, tol, quad_nodes, truncation) for lam in lambda_grid]
    return run_tasks(
        _model_curve_task, tasks, workers=workers, logger=logger,
        kind="grid-point", label=lambda i, t: f"lambda={t[0]:.6g}",
    )


def write_model_curve_csv(d: int, rows: Sequence[ModelCurveRow], path: CsvTarget) -> Path | None:
    return write_csv(
        path,
        ["d", "lambda", "alpha_c", "r_residual", "quad_nodes", "truncation"],
        [(d, r.lam, r.alpha_c, r.r_residual, r.quad_nodes, r.truncation) for r in rows],
    )


# ---------------------------------------------------------------------------
# Monte Carlo orthant oracle
# ---------------------------------------------------------------------------

def _path_factor(model: WaveModel, k: int) -> np.ndarray:
    if k < 0:
        raise ValidationError(f"k must be nonnegative (got {k})")
    if k > MAX_PATH_EDGES:
        raise TooLarge(f"path of {k} edges exceeds the cap {MAX_PATH_EDGES}", flag="--k")
    factor, _ = psd_factor(linalg.toeplitz(phi_sequence(model, k)))
    return factor


def _path_minima(model: WaveModel, k: int, n_samples: int, seed: int) -> Iterator[np.ndarray]:
    """Chunks of running minima m[s, j] = min(X_0, ..., X_j) over sampled paths."""
    if n_samples < 1:
        raise ValidationError(f"n_samples must be positive (got {n_samples})", flag="--samples")
    factor = _path_factor(model, k)
    rng = np.random.default_rng(seed)
    for start in range(0, n_samples, MC_CHUNK):
        m = min(MC_CHUNK, n_samples - start)
        x = rng.standard_normal((m, factor.shape[1])) @ factor.T
        yield np.minimum.accumulate(x, axis=1)


def orthant_mc_profile(
    model: WaveModel, k: int, alpha: float, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """P-hat_0..P-hat_k from one set of path samples, with binomial standard errors."""
    hits = np.zeros(k + 1, dtype=np.int64)
    for chunk in _path_minima(model, k, n_samples, seed):
        hits += (chunk > alpha).sum(axis=0)
    p = hits / n_samples
    return p, np.sqrt(p * (1 - p) / n_samples)


def orthant_mc(model: WaveModel, k: int, alpha: float, n_samples: int, seed: int) -> tuple[float, float]:
    """Fraction of sampled k-edge paths lying entirely above alpha, and its standard error."""
    p, se = orthant_mc_profile(model, k, alpha, n_samples, seed)
    return float(p[-1]), float(se[-1])


def mc_growth_rate(model: WaveModel, alpha: float, k: int, n_samples: int, seed: int) -> float:
    """P-hat_k / P-hat_{k-1}; zero when no sampled path survives k-1 edges."""
    if k < 1:
        raise ValidationError(f"k must be at least 1 (got {k})", flag="--k")
    p, _ = orthant_mc_profile(model, k, alpha, n_samples, seed)
    return float(p[k] / p[k - 1]) if p[k - 1] > 0 else 0.0


def mc_critical_alpha(
    model: WaveModel, k: int, n_samples: int, seed: int, tol: float = DEFAULT_TOL
) -> float:
    """Bisection for P-hat_k / P-hat_{k-1} = 1/(d-1) on one fixed sample set."""
    if k < 1:
        raise ValidationError(f"k must be at least 1 (got {k})", flag="--k")
    chunks = [c[:, k - 1:].copy() for c in _path_minima(model, k, n_samples, seed)]
    prev = np.sort(np.concatenate([c[:, 0] for c in chunks]))
    last = np.sort(np.concatenate([c[:, 1] for c in chunks]))
    target = 1.0 / (model.d - 1)

    def ratio(alpha: float) -> float:
        above_prev = n_samples - np.searchsorted(prev, alpha, side="right")
        above_last = n_samples - np.searchsorted(last, alpha, side="right")
        return above_last / above_prev if above_prev else 0.0

    lo, hi = analytic_bracket(model)
    if not (ratio(lo) > target > ratio(hi)):
        raise BracketFailure(f"sampled ratio does not straddle {target:.6g} on [{lo:.6g}, {hi:.6g}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ratio(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def default_lambda_grid(d: int, step: float = 0.2) -> list[float]:
    """Symmetric grid k*step strictly inside the spectrum."""
    edge = 2.0 * math.sqrt(d - 1)
    m = math.floor(edge / step - 1e-9)
    if m * step >= edge:
        m -= 1
    return [round(i * step, 12) for i in range(-m, m + 1)]
