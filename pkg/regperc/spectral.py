"""Adjacency eigendecomposition and closed-form spectral references.

Eigenvectors are normalized so that sum_v f(v)^2 = n, which keeps the
per-vertex variance of order one as n grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, linalg

from .errors import (
    DegreeTooSmall,
    EmptySpectrum,
    NotSymmetric,
    ResidualTooLarge,
    TooLarge,
)
from .formats import CsvTarget, write_csv
from .regular_graph import Graph

DEFAULT_MAX_N = 4000


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenvalue, eigenvector (sum f^2 = n) and max-norm residual."""
    eigenvalue: float
    vector: np.ndarray
    residual: float


@dataclass(frozen=True)
class SpectrumSupport:
    """Support [-2 sqrt(d-1), 2 sqrt(d-1)] of the tree spectrum."""
    lo: float
    hi: float

    def contains(self, lam: float, strict: bool = False) -> bool:
        if strict:
            return self.lo < lam < self.hi
        return self.lo <= lam <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def spectrum_support(d: int) -> SpectrumSupport:
    _check_degree(d)
    edge = 2.0 * math.sqrt(d - 1)
    return SpectrumSupport(lo=-edge, hi=edge)


def eigendecompose(g: Graph, max_n: int = DEFAULT_MAX_N) -> list[EigenPair]:
    """All n eigenpairs of the adjacency operator, ascending by eigenvalue."""
    if g.n > max_n:
        raise TooLarge(f"n={g.n} exceeds the eigendecomposition cap {max_n}", flag="--n")
    a = g.csr()
    dense = a.toarray()
    if not np.array_equal(dense, dense.T):
        raise NotSymmetric("adjacency matrix is not symmetric")
    values, vectors = linalg.eigh(dense)
    norms = np.linalg.norm(vectors, axis=0)
    vectors = vectors * (math.sqrt(g.n) / norms)
    residuals = np.abs(a @ vectors - vectors * values).max(axis=0)
    bounds = 1e-8 * max(g.d, 1) * np.abs(vectors).max(axis=0)
    bad = np.flatnonzero(residuals > bounds)
    if bad.size:
        i = int(bad[0])
        raise ResidualTooLarge(
            f"eigenpair {i} residual {residuals[i]:.3e} exceeds {bounds[i]:.3e}"
        )
    rows = np.ascontiguousarray(vectors.T)
    return [
        EigenPair(eigenvalue=float(values[i]), vector=rows[i], residual=float(residuals[i]))
        for i in range(g.n)
    ]


def eigenvalues(g: Graph, max_n: int = DEFAULT_MAX_N) -> np.ndarray:
    """Ascending eigenvalues only."""
    if g.n > max_n:
        raise TooLarge(f"n={g.n} exceeds the eigendecomposition cap {max_n}", flag="--n")
    return linalg.eigvalsh(g.csr().toarray())


def mckay_density(lam, d: int):
    """Limiting spectral density of G(n, d); zero outside the support."""
    _check_degree(d)
    lam = np.asarray(lam, dtype=np.float64)
    inside = 4.0 * (d - 1) - lam * lam
    root = np.sqrt(np.clip(inside, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(inside > 0, d / (2 * math.pi) * root / (d * d - lam * lam), 0.0)
    return float(density) if density.ndim == 0 else density


def mckay_bin_masses(d: int, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Bin edges over the support and the density mass in each bin."""
    support = spectrum_support(d)
    edges = np.linspace(support.lo, support.hi, bins + 1)
    masses = np.array([
        integrate.quad(mckay_density, edges[i], edges[i + 1], args=(d,))[0]
        for i in range(bins)
    ])
    return edges, masses


def mckay_histogram_distance(values: Sequence[float], d: int, bins: int = 40) -> float:
    """Total-variation distance between the eigenvalue histogram and the law.

    Eigenvalues outside the support count as unmatched mass.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptySpectrum("no eigenvalues given")
    edges, masses = mckay_bin_masses(d, bins)
    counts, _ = np.histogram(values, bins=edges)
    empirical = counts / values.size
    outside = 1.0 - empirical.sum()
    return 0.5 * (float(np.abs(empirical - masses).sum()) + outside)


def mixing_exponent(d: int) -> float:
    """Lyapunov exponent gamma = 1 - 2 sqrt(d-1)/d of random-walk mixing."""
    _check_degree(d)
    return 1.0 - 2.0 * math.sqrt(d - 1) / d


def nearest_eigenpair(pairs: Sequence[EigenPair], target: float) -> EigenPair:
    """Pair minimizing |lambda - target|; ties go to the smaller eigenvalue."""
    if not pairs:
        raise EmptySpectrum("no eigenpairs to choose from")
    return min(pairs, key=lambda p: (abs(p.eigenvalue - target), p.eigenvalue))


def write_eigen_csv(pairs: Sequence[EigenPair], path: CsvTarget) -> Path | None:
    rows = [(i, p.eigenvalue, p.residual) for i, p in enumerate(pairs)]
    return write_csv(path, ["index", "lambda", "residual"], rows)


def write_vector_csv(pair: EigenPair, path: CsvTarget) -> Path | None:
    rows = [(v, x) for v, x in enumerate(pair.vector.tolist())]
    return write_csv(path, ["vertex", "value"], rows)


def _check_degree(d: int) -> None:
    if d < 3:
        raise DegreeTooSmall(f"d must be at least 3 (got {d})", flag="--d")
