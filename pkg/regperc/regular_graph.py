"""Random d-regular simple graphs: generation, structure statistics, file form.

Graphs are stored in compressed adjacency form (``offsets`` + ``targets``)
with every neighbor list sorted ascending, so all downstream iteration
order is deterministic.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import (
    DegreeTooLarge,
    DegreeTooSmall,
    KTooLarge,
    OddProduct,
    RejectionLimit,
    ValidationError,
)
from .formats import write_text_atomic

SEED_LIMIT = 2**64
MAX_CYCLE_LENGTH = 5
TREE_RADIUS = 2
GENERATORS = ("pairing", "steger-wormald")


class Disconnected(Enum):
    """Marker returned by :func:`diameter` when some vertex is unreachable."""
    DISCONNECTED = "disconnected"


DISCONNECTED = Disconnected.DISCONNECTED


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple d-regular graph with provenance.

    ``targets[offsets[v]:offsets[v+1]]`` are the neighbors of ``v``.
    """
    n: int
    d: int
    offsets: np.ndarray
    targets: np.ndarray
    seed: int = 0
    generator: str = "explicit"
    rejections: int = 0
    _lists: list = field(default=None, init=False, repr=False)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges,
        *,
        seed: int = 0,
        generator: str = "explicit",
        rejections: int = 0,
    ) -> Graph:
        """Build a graph from an undirected edge list and check regularity."""
        if n < 1:
            raise ValidationError("n must be positive", flag="--n")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValidationError(f"edge endpoint outside [0, {n})")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        if np.any(lo == hi):
            raise ValidationError("graph has a self-loop")
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            raise ValidationError("graph has a multi-edge")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        degree = np.bincount(src, minlength=n)
        d = int(degree[0]) if n else 0
        if np.any(degree != d):
            raise ValidationError("graph is not regular")
        order = np.lexsort((dst, src))
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degree, out=offsets[1:])
        return cls(
            n=n,
            d=d,
            offsets=offsets,
            targets=dst[order].astype(np.int64),
            seed=int(seed),
            generator=generator,
            rejections=int(rejections),
        )

    @property
    def m(self) -> int:
        return self.n * self.d // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.targets[self.offsets[v]:self.offsets[v + 1]]

    def neighbor_lists(self) -> list[list[int]]:
        """Neighbor lists as plain Python lists (cached)."""
        if self._lists is None:
            flat = self.targets.tolist()
            off = self.offsets.tolist()
            object.__setattr__(self, "_lists", [flat[off[v]:off[v + 1]] for v in range(self.n)])
        return self._lists

    def edges(self) -> np.ndarray:
        """Edge array with i < j, sorted lexicographically."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.offsets))
        keep = src < self.targets
        return np.column_stack([src[keep], self.targets[keep]])

    def csr(self) -> sparse.csr_matrix:
        """Adjacency operator as a sparse matrix."""
        data = np.ones(self.targets.size, dtype=np.float64)
        return sparse.csr_matrix((data, self.targets, self.offsets), shape=(self.n, self.n))

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "d": self.d, "seed": self.seed, "edges": self.edges().tolist()},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> Graph:
        try:
            data = json.loads(text)
            n, d, seed, edges = data["n"], data["d"], data["seed"], data["edges"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ValidationError(f"malformed graph file: {e}") from e
        g = cls.from_edges(int(n), edges, seed=int(seed), generator="file")
        if g.d != int(d):
            raise ValidationError(f"graph file declares d={d} but edges give degree {g.d}")
        return g


def read_graph(path: str | Path) -> Graph:
    with open(path, encoding="utf-8") as f:
        return Graph.from_json(f.read())


def write_graph(g: Graph, path: str | Path) -> Path:
    return write_text_atomic(path, g.to_json())


@dataclass(frozen=True)
class GraphStats:
    """Structural statistics used to validate the generator.

    ``expected_diameter`` is the random-regular prediction for the same n
    and d (nan below d = 3); ``tree_like`` is the fraction of vertices
    whose radius-``TREE_RADIUS`` ball is a tree.
    """
    cycle_counts: dict[int, int]
    diameter: int | Disconnected
    component_count: int
    expected_diameter: float
    tree_like: float

    def summary(self) -> str:
        cycles = ", ".join(f"C{k}={c}" for k, c in sorted(self.cycle_counts.items()))
        diam = self.diameter.value if isinstance(self.diameter, Disconnected) else self.diameter
        return (
            f"{cycles}; diameter={diam} (expected {self.expected_diameter:.2f}); "
            f"components={self.component_count}; tree-like r={TREE_RADIUS}: {self.tree_like:.4f}"
        )


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

RESTART_POLICIES = ("fixed", "scaled")


def default_restart_limit(d: int) -> int:
    return 10 * d * d


def scaled_restart_limit(d: int) -> int:
    """10*d^2, raised to 20x the expected number of pairing attempts.

    The whole-matching acceptance probability tends to exp(-(d^2-1)/4); the
    raise is capped at 10^6.
    """
    expected = math.exp((d * d - 1) / 4)
    return max(default_restart_limit(d), min(math.ceil(20 * expected), 10**6))


def restart_limit(d: int, policy: int | str = "fixed") -> int:
    """Restart budget for ``policy``: "fixed", "scaled" or a positive count."""
    if policy == "fixed":
        return default_restart_limit(d)
    if policy == "scaled":
        return scaled_restart_limit(d)
    try:
        limit = int(policy)
    except (TypeError, ValueError):
        raise ValidationError(
            f"restarts must be one of {RESTART_POLICIES} or a positive count (got {policy!r})", flag="--restarts"
        ) from None
    if limit < 1:
        raise ValidationError("restarts must be positive", flag="--restarts")
    return limit


def generate_regular(
    n: int,
    d: int,
    seed: int,
    *,
    method: str = "pairing",
    max_restarts: int | str = "fixed",
) -> Graph:
    """Sample a simple d-regular graph on n vertices.

    ``pairing`` draws a uniform perfect matching of the n*d half-edges and
    restarts the whole matching on any loop or multi-edge; accepted graphs
    are exactly uniform. ``steger-wormald`` pairs half-edges sequentially,
    rejecting only the offending pair, and is the practical choice for
    larger d. ``max_restarts`` is a policy for restart_limit.
    """
    check_graph_parameters(n, d, seed)
    if method not in GENERATORS:
        raise ValidationError(f"unknown generator {method!r}", flag="--generator")
    limit = restart_limit(d, max_restarts)
    rng = np.random.default_rng(seed)
    attempt = _pairing_attempt if method == "pairing" else _steger_wormald_attempt
    for restart in range(limit):
        edges = attempt(n, d, rng)
        if edges is not None:
            return Graph.from_edges(n, edges, seed=seed, generator=method, rejections=restart)
    hint = " (try --restarts scaled or --generator steger-wormald)" if method == "pairing" else ""
    raise RejectionLimit(
        f"no simple {d}-regular graph on {n} vertices after {limit} restarts{hint}"
    )


def check_graph_parameters(n: int, d: int, seed: int) -> None:
    if n < 1:
        raise ValidationError("n must be positive", flag="--n")
    if d < 3:
        raise DegreeTooSmall(f"d must be at least 3 (got {d})", flag="--d")
    if (n * d) % 2:
        raise OddProduct(f"n*d must be even (n={n}, d={d})", flag="--n")
    if d >= n:
        raise DegreeTooLarge(f"d must be smaller than n (n={n}, d={d})", flag="--d")
    if not 0 <= seed < SEED_LIMIT:
        raise ValidationError("seed must be a 64-bit unsigned integer", flag="--seed")


def _pairing_attempt(n: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    pairs = rng.permutation(stubs).reshape(-1, 2)
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    if np.any(lo == hi):
        return None
    keys = lo * n + hi
    if np.unique(keys).size != keys.size:
        return None
    return np.column_stack([lo, hi])


def _steger_wormald_attempt(n: int, d: int, rng: np.random.Generator) -> np.ndarray | None:
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    while stubs.size:
        rng.shuffle(stubs)
        potential: dict[int, int] = defaultdict(int)
        for s1, s2 in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                potential[s1] += 1
                potential[s2] += 1
        if not _suitable(edges, potential):
            return None
        stubs = np.array(
            [node for node in sorted(potential) for _ in range(potential[node])],
            dtype=np.int64,
        )
    return np.array(sorted(edges), dtype=np.int64)


def _suitable(edges: set[tuple[int, int]], potential: dict[int, int]) -> bool:
    # True when some pair of leftover half-edges can still form a new edge.
    if not potential:
        return True
    nodes = sorted(potential)
    for i, s1 in enumerate(nodes):
        for s2 in nodes[i + 1:]:
            if (s1, s2) not in edges:
                return True
    return False


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------

def count_cycles(g: Graph, k_max: int = MAX_CYCLE_LENGTH) -> dict[int, int]:
    """Exact number of simple k-cycles for k in 3..k_max.

    Each cycle is enumerated from its smallest vertex and counted in one
    orientation only (second vertex < last vertex).
    """
    if k_max > MAX_CYCLE_LENGTH:
        raise KTooLarge(f"k_max must be at most {MAX_CYCLE_LENGTH} (got {k_max})", flag="--kmax")
    if k_max < 3:
        raise ValidationError(f"k_max must be at least 3 (got {k_max})", flag="--kmax")
    adj = g.neighbor_lists()
    counts = {k: 0 for k in range(3, k_max + 1)}

    def extend(start: int, path: list[int], on_path: set[int]) -> None:
        last = path[-1]
        for u in adj[last]:
            if u == start:
                if len(path) >= 3 and path[1] < last:
                    counts[len(path)] += 1
            elif u > start and u not in on_path and len(path) < k_max:
                path.append(u)
                on_path.add(u)
                extend(start, path, on_path)
                on_path.discard(u)
                path.pop()

    for s in range(g.n):
        extend(s, [s], {s})
    return counts


def diameter(g: Graph, chunk: int = 256) -> int | Disconnected:
    """Maximum BFS eccentricity, or DISCONNECTED."""
    a = g.csr()
    best = 0
    for start in range(0, g.n, chunk):
        idx = np.arange(start, min(start + chunk, g.n))
        dist = csgraph.shortest_path(a, method="D", directed=False, unweighted=True, indices=idx)
        if np.isinf(dist).any():
            return DISCONNECTED
        best = max(best, int(dist.max()))
    return best


def component_count(g: Graph) -> int:
    count, _ = csgraph.connected_components(g.csr(), directed=False)
    return int(count)


def graph_stats(g: Graph, k_max: int = MAX_CYCLE_LENGTH) -> GraphStats:
    return GraphStats(
        cycle_counts=count_cycles(g, k_max),
        diameter=diameter(g),
        component_count=component_count(g),
        expected_diameter=expected_diameter(g.n, g.d) if g.d >= 3 and g.n > 1 else math.nan,
        tree_like=tree_like_fraction(g, TREE_RADIUS),
    )


def tree_like_fraction(g: Graph, radius: int) -> float:
    """Fraction of vertices whose radius-ball induces a tree."""
    if radius < 0:
        raise ValidationError("radius must be nonnegative", flag="--radius")
    adj = g.neighbor_lists()
    trees = 0
    for root in range(g.n):
        depth = {root: 0}
        frontier = [root]
        for r in range(radius):
            nxt = []
            for v in frontier:
                for u in adj[v]:
                    if u not in depth:
                        depth[u] = r + 1
                        nxt.append(u)
            frontier = nxt
        inner_edges = sum(1 for v in depth for u in adj[v] if u in depth) // 2
        if inner_edges == len(depth) - 1:
            trees += 1
    return trees / g.n


def expected_cycle_count(d: int, k: int) -> float:
    """Limiting mean of the k-cycle count, (d-1)^k / (2k)."""
    return (d - 1) ** k / (2 * k)


def expected_diameter(n: int, d: int) -> float:
    """Leading-order diameter log_{d-1}(n ln n)."""
    return math.log(n * math.log(n)) / math.log(d - 1)
