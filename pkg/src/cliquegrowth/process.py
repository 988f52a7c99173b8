"""The reinforced allocation process: rate model, stable sampling, trajectories.

One particle is allocated per step; vertex v is chosen with probability
proportional to exp(L_v) where L_v is a linear function of the current counts
in the closed neighbourhood of v.  All probability work happens on the
exponents L_v with max-subtraction, never on the raw rates, so runs of 10^6+
steps stay finite in 64-bit floats.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import IO, Mapping

import numpy as np

from .graphs import Graph, is_connected

__all__ = [
    "RateParams",
    "State",
    "ExponentCache",
    "Trajectory",
    "make_rng",
    "rate_exponent",
    "exponent_vector",
    "transition_probs",
    "draw_vertex",
    "apply_allocation",
    "step",
    "run",
    "write_trajectory_csv",
    "write_state_csv",
]

REGIME_SINGLE_VERTEX = "single_vertex"
REGIME_CRITICAL = "critical"
REGIME_CLIQUE = "clique"
REGIME_OTHER = "other"


@dataclass(frozen=True)
class RateParams:
    """Interaction parameters of the allocation process.

    Uniform mode uses one own-count weight `alpha` and one neighbour-count
    weight `beta` for every vertex.  General mode carries per-vertex weights
    `alpha_v` and per-ordered-pair weights `beta_vu` (the weight of u's count
    inside v's exponent), supported on adjacent pairs only.  `base_offset_v`
    adds a constant to each exponent, i.e. a multiplicative prefactor on the
    rate; it defaults to zero.
    """

    mode: str
    alpha: float | None = None
    beta: float | None = None
    alpha_v: tuple[float, ...] | None = None
    beta_vu: tuple[tuple[int, int, float], ...] | None = None
    base_offset_v: tuple[float, ...] | None = None

    @staticmethod
    def uniform(alpha: float, beta: float,
                base_offset_v: tuple[float, ...] | None = None) -> "RateParams":
        return RateParams(mode="uniform", alpha=float(alpha), beta=float(beta),
                          base_offset_v=None if base_offset_v is None
                          else tuple(float(c) for c in base_offset_v))

    @staticmethod
    def general(alpha_v, beta_vu: Mapping[tuple[int, int], float],
                base_offset_v=None) -> "RateParams":
        return RateParams(
            mode="general",
            alpha_v=tuple(float(a) for a in alpha_v),
            beta_vu=tuple(sorted((v, u, float(b)) for (v, u), b in beta_vu.items())),
            base_offset_v=None if base_offset_v is None
            else tuple(float(c) for c in base_offset_v),
        )

    @property
    def regime(self) -> str:
        """Parameter regime: single_vertex (beta<alpha), critical (alpha=beta),
        clique (alpha<beta) for positive uniform parameters, else other."""
        if self.mode != "uniform":
            return REGIME_OTHER
        a, b = self.alpha, self.beta
        if not (a > 0 and b > 0):
            return REGIME_OTHER
        if b < a:
            return REGIME_SINGLE_VERTEX
        if a == b:
            return REGIME_CRITICAL
        return REGIME_CLIQUE

    @property
    def lam(self) -> float:
        """The regime rate: alpha in the critical regime, beta-alpha in the
        clique regime.  Undefined elsewhere."""
        r = self.regime
        if r == REGIME_CRITICAL:
            return self.alpha
        if r == REGIME_CLIQUE:
            return self.beta - self.alpha
        raise ValueError(f"lambda is undefined in regime {r!r}")

    def arrays(self, g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Materialize (alpha_vec, beta_mat, offset_vec) for graph g.

        beta_mat[v, u] is the weight of u's count in v's exponent; zero off
        the adjacency.  Raises if general-mode arrays do not fit g.
        """
        return _materialized_arrays(self, g)


@lru_cache(maxsize=64)
def _materialized_arrays(p: RateParams, g: Graph):
    n = g.n
    if p.mode == "uniform":
        alpha_vec = np.full(n, p.alpha, dtype=np.float64)
        beta_mat = np.zeros((n, n), dtype=np.float64)
        for v in range(n):
            for u in g.adjacency[v]:
                beta_mat[v, u] = p.beta
    elif p.mode == "general":
        if len(p.alpha_v) != n:
            raise ValueError(f"alpha_v has length {len(p.alpha_v)}, graph has {n} vertices")
        alpha_vec = np.asarray(p.alpha_v, dtype=np.float64)
        beta_mat = np.zeros((n, n), dtype=np.float64)
        for v, u, b in p.beta_vu:
            if not (0 <= v < n and 0 <= u < n) or u not in g.adjacency[v]:
                raise ValueError(f"beta_vu defined for non-adjacent pair ({v}, {u})")
            beta_mat[v, u] = b
    else:
        raise ValueError(f"unknown mode {p.mode!r}")
    if p.base_offset_v is None:
        offset = np.zeros(n, dtype=np.float64)
    else:
        if len(p.base_offset_v) != n:
            raise ValueError("base_offset_v length does not match the graph")
        offset = np.asarray(p.base_offset_v, dtype=np.float64)
    alpha_vec.setflags(write=False)
    beta_mat.setflags(write=False)
    offset.setflags(write=False)
    return alpha_vec, beta_mat, offset


@dataclass
class State:
    """Per-vertex particle counts."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @staticmethod
    def zeros(n: int) -> "State":
        return State(np.zeros(n, dtype=np.int64))

    @staticmethod
    def from_label_counts(g: Graph, label_counts: Mapping[int, int]) -> "State":
        counts = np.zeros(g.n, dtype=np.int64)
        for lab, c in label_counts.items():
            counts[g.index(lab)] = c
        return State(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def copy(self) -> "State":
        return State(self.counts.copy())


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic generator: PCG64 keyed by SeedSequence([seed, stream]).

    Replica i of a multi-replica experiment uses stream=i, giving independent
    streams that are reproducible from the single master seed.
    """
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


def rate_exponent(params: RateParams, g: Graph, state: State, v: int) -> float:
    """L_v = offset_v + alpha_v x_v + sum over neighbours u of beta_vu x_u."""
    alpha_vec, beta_mat, offset = params.arrays(g)
    x = state.counts
    return float(offset[v] + alpha_vec[v] * x[v] + beta_mat[v] @ x)

def exponent_vector(params: RateParams, g: Graph, state: State) -> np.ndarray:
    """All rate exponents, computed from scratch."""
    alpha_vec, beta_mat, offset = params.arrays(g)
    x = state.counts.astype(np.float64)
    return offset + alpha_vec * x + beta_mat @ x


def transition_probs(params: RateParams, g: Graph, state: State) -> np.ndarray:
    """One-step allocation probabilities, exp(L_v - max L) normalized."""
    return probs_from_exponents(exponent_vector(params, g, state))


def probs_from_exponents(exponents: np.ndarray) -> np.ndarray:
    w = np.exp(exponents - exponents.max())
    return w / w.sum()


def draw_vertex(exponents: np.ndarray, rng: np.random.Generator) -> int:
    """Sample one vertex by inverse CDF over the stabilized weights.

    Uses a single uniform draw; a draw of 0 selects the first vertex in index
    order with positive cumulative mass.
    """
    w = np.exp(exponents - exponents.max())
    c = np.cumsum(w)
    v = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return min(v, len(c) - 1)


class ExponentCache:
    """Incrementally maintained rate exponents for one (params, graph) pair.

    An allocation at v bumps L_v by alpha_v and L_u by beta_uv for each
    neighbour u, a deg(v)+1 update.  `exponents` stays within 1e-9 of the
    from-scratch recomputation over long runs.
    """

    __slots__ = ("exponents", "_bump_idx", "_bump_val")

    def __init__(self, exponents: np.ndarray, bump_idx, bump_val):
        self.exponents = exponents
        self._bump_idx = bump_idx
        self._bump_val = bump_val

    @staticmethod
    def build(params: RateParams, g: Graph, state: State) -> "ExponentCache":
        alpha_vec, beta_mat, _ = params.arrays(g)
        bump_idx = []
        bump_val = []
        for v in range(g.n):
            idx = np.array([v] + sorted(g.adjacency[v]), dtype=np.intp)
            val = np.empty(len(idx), dtype=np.float64)
            val[0] = alpha_vec[v]
            val[1:] = beta_mat[idx[1:], v]
            bump_idx.append(idx)
            bump_val.append(val)
        return ExponentCache(exponent_vector(params, g, state), bump_idx, bump_val)

    def allocation_delta(self, v: int) -> np.ndarray:
        """Dense exponent increment caused by one allocation at v."""
        delta = np.zeros(len(self.exponents), dtype=np.float64)
        delta[self._bump_idx[v]] = self._bump_val[v]
        return delta


def apply_allocation(state: State, cache: ExponentCache, v: int) -> None:
    """Add one particle at v, updating counts and cached exponents in place."""
    state.counts[v] += 1
    cache.exponents[cache._bump_idx[v]] += cache._bump_val[v]


def step(state: State, cache: ExponentCache, rng: np.random.Generator) -> int:
    """Sample one allocation vertex and apply it."""
    v = draw_vertex(cache.exponents, rng)
    apply_allocation(state, cache, v)
    return v


@dataclass
class Trajectory:
    """A realized run: initial state plus the ordered allocation vertices.

    Replaying `allocations` from `initial` reproduces the final state; the
    run is fully determined by (seed, stream).
    """

    initial: State
    allocations: np.ndarray
    seed: int
    stream: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.allocations)

    def final_counts(self) -> np.ndarray:
        counts = self.initial.counts.copy()
        if len(self.allocations):
            np.add.at(counts, self.allocations, 1)
        return counts

    def final_state(self) -> State:
        return State(self.final_counts())

    def counts_at(self, n: int) -> np.ndarray:
        """Counts after the first n allocations."""
        counts = self.initial.counts.copy()
        if n:
            np.add.at(counts, self.allocations[:n], 1)
        return counts

    def count_paths(self, vertices) -> np.ndarray:
        """Running counts, shape (n_steps+1, len(vertices)); row 0 is initial."""
        verts = list(vertices)
        out = np.empty((self.n_steps + 1, len(verts)), dtype=np.int64)
        for j, v in enumerate(verts):
            out[0, j] = self.initial.counts[v]
            np.cumsum(self.allocations == v, out=out[1:, j])
            out[1:, j] += self.initial.counts[v]
        return out


def run(g: Graph, params: RateParams, x0: State, steps: int,
        seed: int, stream: int = 0) -> Trajectory:
    """Run the allocation process for `steps` steps from x0.

    Rejects disconnected graphs (the localisation statements assume
    connectivity).  Deterministic given (seed, stream).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if not is_connected(g):
        raise ValueError("graph must be connected")
    if len(x0.counts) != g.n:
        raise ValueError("initial state size does not match the graph")
    state = x0.copy()
    cache = ExponentCache.build(params, g, state)
    rng = make_rng(seed, stream)
    alloc = np.empty(steps, dtype=np.int64)
    for i in range(steps):
        alloc[i] = step(state, cache, rng)
    return Trajectory(initial=x0.copy(), allocations=alloc, seed=seed, stream=stream)


def write_trajectory_csv(fh: IO[str], t: Trajectory, g: Graph) -> None:
    """Write `step,vertex` rows (1-based steps, vertex labels)."""
    fh.write("step,vertex\n")
    labels = g.labels
    for i, v in enumerate(t.allocations, start=1):
        fh.write(f"{i},{labels[v]}\n")


def write_state_csv(fh: IO[str], state: State, g: Graph) -> None:
    """Write a `vertex,count` snapshot (vertex labels, index order)."""
    fh.write("vertex,count\n")
    for v in range(g.n):
        fh.write(f"{g.labels[v]},{int(state.counts[v])}\n")
