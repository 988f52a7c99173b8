"""Trajectory post-processing: localisation detection, ratio limits,
count-difference chains, renewal times, and Monte Carlo aggregation.

The localisation statements are asymptotic; every finite-horizon detector
here is an explicit proxy (tail support over the last fraction of a run) and
replicas that have not settled are reported as undecided, never force-fitted.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .detection import final_maximal_clique
from .graphs import Graph, enumerate_maximal_cliques, is_clique
from .process import RateParams, State, Trajectory, run

__all__ = [
    "Classification",
    "ReplicaOutcome",
    "LocalisationReport",
    "ZChainPath",
    "localisation_set",
    "classify_outcome",
    "c_matrix",
    "ratio_limit_check",
    "lln_deviation",
    "z_chain",
    "renewal_times",
    "monte_carlo_report",
    "replica_outcome",
    "write_ratio_trace_csv",
]

KIND_SINGLE_VERTEX = "single_vertex"
KIND_CLIQUE = "clique"
KIND_UNDECIDED = "undecided"


@dataclass(frozen=True)
class Classification:
    kind: str
    members: tuple[int, ...]


@dataclass(frozen=True)
class ReplicaOutcome:
    """Summary of one replica at its horizon."""

    localisation_set: tuple[int, ...]
    classification: Classification
    onset: int
    ratio_matrix: tuple[tuple[float, ...], ...] | None
    c_matrix: tuple[tuple[float, ...], ...] | None


@dataclass(frozen=True)
class LocalisationReport:
    replicas: int
    per_replica: tuple[ReplicaOutcome, ...]
    clique_frequencies: dict[tuple[int, ...], float]
    single_vertex_frequency: float
    undecided_frequency: float

    def to_jsonable(self, g: Graph) -> dict:
        """JSON-ready dict with vertex indices translated to labels."""

        def lab(vs):
            return [int(g.labels[v]) for v in vs]

        per = []
        for r in self.per_replica:
            per.append({
                "localisation_set": lab(r.localisation_set),
                "classification": r.classification.kind,
                "onset": r.onset,
                "ratio_matrix": None if r.ratio_matrix is None
                else [list(row) for row in r.ratio_matrix],
                "c_matrix": None if r.c_matrix is None
                else [list(row) for row in r.c_matrix],
            })
        return {
            "replicas": self.replicas,
            "per_replica": per,
            "aggregate": {
                "clique_frequencies": {
                    ",".join(str(x) for x in lab(c)): f
                    for c, f in sorted(self.clique_frequencies.items())
                },
                "single_vertex_frequency": self.single_vertex_frequency,
                "undecided_frequency": self.undecided_frequency,
            },
        }


def localisation_set(t: Trajectory, tail_fraction: float) -> tuple[int, ...]:
    """Vertices hit in the last ceil(tail_fraction * n) allocations, sorted."""
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    n = t.n_steps
    if n == 0:
        raise ValueError("empty trajectory")
    tail = t.allocations[n - math.ceil(tail_fraction * n):]
    return tuple(sorted(int(v) for v in np.unique(tail)))


def classify_outcome(g: Graph, s: Sequence[int]) -> Classification:
    """single_vertex for singletons, clique for maximal cliques, else undecided."""
    members = tuple(sorted(set(s)))
    if len(members) == 1:
        return Classification(KIND_SINGLE_VERTEX, members)
    if members in set(enumerate_maximal_cliques(g)):
        return Classification(KIND_CLIQUE, members)
    return Classification(KIND_UNDECIDED, members)


def c_matrix(g: Graph, lam: float, state: State, clique: Sequence[int]) -> np.ndarray:
    """Log-ratio matrix of the critical regime at `state`.

    Entry (i, j) is lam times the signed count of particles at vertices
    adjacent to clique vertex i but not to clique vertex j (minus the reverse),
    skipping the two vertices themselves.  Within the clique the terminal
    count ratio of i over j converges to exp of this entry.  Antisymmetric
    by construction.
    """
    verts = list(clique)
    if not is_clique(g, verts) or len(verts) < 2:
        raise ValueError(f"{tuple(verts)} is not a clique of size >= 2")
    x = state.counts
    m = len(verts)
    out = np.zeros((m, m), dtype=np.float64)
    for i in range(m):
        for j in range(i + 1, m):
            v, u = verts[i], verts[j]
            total = 0
            for w in range(g.n):
                if w == v or w == u:
                    continue
                wv = w in g.adjacency[v]
                wu = w in g.adjacency[u]
                if wv and not wu:
                    total += int(x[w])
                elif wu and not wv:
                    total -= int(x[w])
            out[i, j] = lam * total
            out[j, i] = -out[i, j]
    return out


def ratio_limit_check(t: Trajectory, clique: Sequence[int],
                      target: np.ndarray, tol: float) -> tuple[bool, float]:
    """Compare terminal count ratios against a target matrix.

    Returns (within tolerance, max relative deviation) over ordered pairs.
    Raises if the set has fewer than two vertices or a zero terminal count.
    """
    verts = list(clique)
    if len(verts) < 2:
        raise ValueError("ratio check needs at least two vertices")
    target = np.asarray(target, dtype=np.float64)
    counts = t.final_counts()[verts].astype(np.float64)
    if (counts == 0).any():
        raise ValueError("zero terminal count at a clique vertex")
    worst = 0.0
    for i in range(len(verts)):
        for j in range(len(verts)):
            if i == j:
                continue
            dev = abs(counts[i] / counts[j] - target[i, j]) / target[i, j]
            worst = max(worst, dev)
    return worst <= tol, worst


def lln_deviation(t: Trajectory, clique: Sequence[int],
                  probs=None, n0: int = 1) -> float:
    """sup over n >= n0 of (1/n) sum_i |X_i(n) - p_i n| along the trajectory.

    `probs` defaults to the uniform distribution over the clique.
    """
    verts = list(clique)
    n = t.n_steps
    if not 0 < n0 <= n:
        raise ValueError("need 0 < n0 <= horizon")
    p = (np.full(len(verts), 1.0 / len(verts)) if probs is None
         else np.asarray(probs, dtype=np.float64))
    paths = t.count_paths(verts).astype(np.float64)  # (n+1, m)
    ns = np.arange(n0, n + 1, dtype=np.float64)
    dev = np.abs(paths[n0:] - ns[:, None] * p[None, :]).sum(axis=1) / ns
    return float(dev.max())


@dataclass(frozen=True)
class ZChainPath:
    """Count differences against the last vertex of a complete graph."""

    z_path: np.ndarray          # (n_steps+1, m-1) integers
    return_times: np.ndarray    # 0, then every n >= 1 with Z(n) = 0

    def gaps(self) -> np.ndarray:
        return np.diff(self.return_times)


def z_chain(t: Trajectory, g: Graph) -> ZChainPath:
    """Difference the counts of a complete-graph run against its last vertex."""
    m = g.n
    for v in range(m):
        if len(g.adjacency[v]) != m - 1:
            raise ValueError("z_chain requires a complete graph")
    paths = t.count_paths(range(m))
    z = paths[:, : m - 1] - paths[:, m - 1:m]
    at_origin = np.flatnonzero((z == 0).all(axis=1))
    returns = at_origin[at_origin >= 1]
    return ZChainPath(z_path=z, return_times=np.concatenate(([0], returns)))


def renewal_times(t: Trajectory, g: Graph, params: RateParams) -> list[int]:
    """Successive first times an allocation leaves the current final clique.

    Starts at time 0; each subsequent entry is the first allocation outside
    the final maximal clique (lexicographic ties) of the state at the
    previous entry.  Stops at the horizon.
    """
    times = [0]
    counts = t.initial.counts.copy()
    alloc = t.allocations
    pos = 0
    n = len(alloc)
    while True:
        clique = final_maximal_clique(g, params, State(counts.copy()), "lex")
        cset = clique.as_set()
        found = None
        while pos < n:
            v = int(alloc[pos])
            pos += 1
            counts[v] += 1
            if v not in cset:
                found = pos  # 1-based time of the escaping allocation
                break
        if found is None:
            return times
        times.append(found)


def onset_step(t: Trajectory, s: Sequence[int]) -> int:
    """Last 1-based step allocating outside `s`; 0 if the run never left it."""
    outside = ~np.isin(t.allocations, list(s))
    hits = np.flatnonzero(outside)
    return int(hits[-1]) + 1 if len(hits) else 0


def replica_outcome(g: Graph, params: RateParams, t: Trajectory,
                    tail_fraction: float) -> ReplicaOutcome:
    """Classify one trajectory and collect its terminal matrices."""
    s = localisation_set(t, tail_fraction)
    cls = classify_outcome(g, s)
    onset = onset_step(t, s)
    ratios = None
    cmat = None
    if cls.kind == KIND_CLIQUE:
        counts = t.final_counts()[list(s)].astype(np.float64)
        ratios = tuple(
            tuple(float(counts[i] / counts[j]) for j in range(len(s)))
            for i in range(len(s))
        )
        if params.regime == "critical":
            cmat = tuple(
                tuple(float(x) for x in row)
                for row in c_matrix(g, params.lam, t.final_state(), s)
            )
        elif params.regime == "clique":
            # the log-ratio limits vanish here: ratios converge to 1
            cmat = tuple((0.0,) * len(s) for _ in s)
    return ReplicaOutcome(s, cls, onset, ratios, cmat)


def _replica_outcome_job(args) -> ReplicaOutcome:
    # module-level so ProcessPoolExecutor can pickle it
    g, params, x0, steps, seed, stream, tail_fraction = args
    t = run(g, params, x0, steps, seed, stream=stream)
    return replica_outcome(g, params, t, tail_fraction)


def monte_carlo_report(g: Graph, params: RateParams, x0: State, steps: int,
                       replicas: int, seed: int, tail_fraction: float = 0.5,
                       jobs: int = 1) -> LocalisationReport:
    """Run independent replicas and aggregate their localisation outcomes.

    Replica i uses the RNG stream (seed, i); results are folded in replica
    order, so the report is identical for any `jobs`.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    args = [(g, params, x0, steps, seed, i, tail_fraction) for i in range(replicas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_replica_outcome_job, args, chunksize=8))
    else:
        outcomes = [_replica_outcome_job(a) for a in args]

    freq: dict[tuple[int, ...], float] = {c: 0.0 for c in enumerate_maximal_cliques(g)}
    single = 0
    undecided = 0
    for out in outcomes:
        kind = out.classification.kind
        if kind == KIND_CLIQUE:
            freq[out.classification.members] += 1.0
        elif kind == KIND_SINGLE_VERTEX:
            single += 1
        else:
            undecided += 1
    return LocalisationReport(
        replicas=replicas,
        per_replica=tuple(outcomes),
        clique_frequencies={c: f / replicas for c, f in freq.items()},
        single_vertex_frequency=single / replicas,
        undecided_frequency=undecided / replicas,
    )


def write_ratio_trace_csv(fh: IO[str], t: Trajectory, g: Graph,
                          clique: Sequence[int]) -> None:
    """Write `n,v,u,ratio` rows for every ordered clique pair over time.

    Rows start at the first n where both counts are positive.
    """
    verts = list(clique)
    paths = t.count_paths(verts)
    fh.write("n,v,u,ratio\n")
    for i, v in enumerate(verts):
        for j, u in enumerate(verts):
            if i == j:
                continue
            for n in range(t.n_steps + 1):
                if paths[n, i] > 0 and paths[n, j] > 0:
                    fh.write(
                        f"{n},{g.labels[v]},{g.labels[u]},"
                        f"{paths[n, i] / paths[n, j]!r}\n")
