"""Uniform spanning trees and forests via Wilson's algorithm.

The degree of a fixed vertex in a uniform spanning forest estimates twice the
cost of the forest; on Cayley balls the free and wired boundary conditions
approximate the free and wired uniform spanning forests of the infinite graph.

Seeds: replica ``i`` of a run seeded with ``seed`` draws from
``numpy.random.SeedSequence(seed, spawn_key=(i,))``, so replicas are
independent streams and can be produced in any order or in parallel.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from statistics import NormalDist

import numpy as np

from ._validation import InteriorityError, check_positive_int
from .groups import cayley_ball

CONFIDENCE = 0.99
_BUFFER = 4096


class DisconnectedGraphError(ValueError):
    pass


@dataclass(eq=False)
class FiniteGraph:
    """Undirected multigraph on ``0..n_vertices-1`` without loops."""

    n_vertices: int
    edges: np.ndarray
    boundary: frozenset = frozenset()
    base: int | None = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= self.n_vertices):
            raise ValueError("edge endpoint out of range")
        if np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise ValueError("loops are not allowed")
        self.boundary = frozenset(int(v) for v in self.boundary)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def half_edges(self):
        """Per vertex: (list of neighbours, list of edge ids), aligned."""
        nb = [[] for _ in range(self.n_vertices)]
        ids = [[] for _ in range(self.n_vertices)]
        for e, (u, v) in enumerate(self.edges.tolist()):
            nb[u].append(v)
            ids[u].append(e)
            nb[v].append(u)
            ids[v].append(e)
        return nb, ids

    @cached_property
    def degree(self):
        d = np.bincount(self.edges[:, 0], minlength=self.n_vertices)
        return d + np.bincount(self.edges[:, 1], minlength=self.n_vertices)

    @cached_property
    def is_connected(self):
        if self.n_vertices == 0:
            return True
        nb, _ = self.half_edges
        seen = [False] * self.n_vertices
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for w in nb[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        return all(seen)

    def edge_boundary(self, members):
        m = np.zeros(self.n_vertices, dtype=bool)
        m[list(members)] = True
        return int(np.count_nonzero(m[self.edges[:, 0]] != m[self.edges[:, 1]]))


@dataclass(eq=False)
class ForestSample:
    """One sampled forest: edge ids of ``graph`` and the degree vector."""

    graph: FiniteGraph = field(repr=False)
    edges: np.ndarray
    degree: np.ndarray
    seed: object = None

    def is_acyclic(self):
        parent = list(range(self.graph.n_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for u, v in self.graph.edges[self.edges].tolist():
            ru, rv = find(u), find(v)
            if ru == rv:
                return False
            parent[ru] = rv
        return True


def edge_inclusion_probabilities(graph):
    """Exact probability that each edge lies in the uniform spanning tree.

    Kirchhoff: it equals the effective resistance between the endpoints
    (unit conductances). Dense, so meant for graphs of a few thousand
    vertices at most.
    """
    if not graph.is_connected:
        raise DisconnectedGraphError("graph is not connected")
    n = graph.n_vertices
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    L = np.zeros((n, n))
    np.add.at(L, (u, v), -1.0)
    np.add.at(L, (v, u), -1.0)
    L[np.diag_indices(n)] = graph.degree
    Lp = np.linalg.pinv(L, hermitian=True)
    return Lp[u, u] + Lp[v, v] - 2 * Lp[u, v]


def torus_graph(n, d):
    """Discrete torus ``(Z/n)^d`` for ``d`` in {1, 2}, ``n >= 3``."""
    n = check_positive_int(n, "n", minimum=3)
    if d not in (1, 2):
        raise ValueError(f"d must be 1 or 2, got {d}")
    if d == 1:
        return FiniteGraph(n, [(i, (i + 1) % n) for i in range(n)])
    idx = lambda i, j: (i % n) * n + (j % n)  # noqa: E731
    edges = [(idx(i, j), idx(i + 1, j)) for i in range(n) for j in range(n)]
    edges += [(idx(i, j), idx(i, j + 1)) for i in range(n) for j in range(n)]
    return FiniteGraph(n * n, edges)


def replica_rng(seed, i):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def _wilson(graph, root, rng):
    nb, ids = graph.half_edges
    n = graph.n_vertices
    in_tree = [False] * n
    in_tree[root] = True
    nxt = [0] * n
    nxt_edge = [0] * n
    chosen = []
    buf = rng.random(_BUFFER).tolist()
    pos = 0
    for start in range(n):
        u = start
        while not in_tree[u]:
            if pos == _BUFFER:
                buf = rng.random(_BUFFER).tolist()
                pos = 0
            k = int(buf[pos] * len(nb[u]))
            pos += 1
            nxt[u] = nb[u][k]
            nxt_edge[u] = ids[u][k]
            u = nxt[u]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            chosen.append(nxt_edge[u])
            u = nxt[u]
    return chosen


def wilson_ust(graph, root=0, rng_seed=None, rng=None):
    """Uniform spanning tree of a connected multigraph (loop-erased walks).

    Walks pick uniformly among incident half-edges, so parallel edges are
    distinct trees. Deterministic for a given ``rng_seed``.
    """
    if not 0 <= root < graph.n_vertices:
        raise IndexError(f"root {root} out of range")
    if not graph.is_connected:
        raise DisconnectedGraphError("graph is disconnected")
    if rng is None:
        rng = np.random.default_rng(rng_seed)
    chosen = np.sort(np.asarray(_wilson(graph, root, rng), dtype=np.int64))
    ends = graph.edges[chosen]
    degree = np.bincount(ends.ravel(), minlength=graph.n_vertices)
    return ForestSample(graph, chosen, degree, rng_seed)


# -- balls ---------------------------------------------------------------------


@dataclass(eq=False)
class BallSampler:
    """Pre-built free or wired graph of a Cayley ball, reused across samples."""

    ball: object
    mode: str

    def __post_init__(self):
        if self.mode not in ("free", "wired"):
            raise ValueError(f"mode must be 'free' or 'wired', got {self.mode!r}")
        if self.ball.radius < 1:
            raise ValueError("ball radius must be >= 1")
        b = self.ball
        outer = frozenset(np.flatnonzero(~b.interior).tolist())
        self.graph = FiniteGraph(b.n_vertices, b.edges[:, :2], boundary=outer, base=0)
        if self.mode == "free":
            self._sample_graph = self.graph
            self._edge_ids = np.arange(b.n_edges)
            self._root = 0
            return
        # interior vertices come first in BFS order; the outer sphere becomes
        # one vertex with index n_int
        n_int = int(np.count_nonzero(b.interior))
        ends = np.minimum(b.edges[:, :2], n_int)
        keep = ends[:, 0] != ends[:, 1]
        self._sample_graph = FiniteGraph(n_int + 1, ends[keep])
        self._edge_ids = np.flatnonzero(keep)
        self._root = n_int
        self._n_int = n_int

    def expected_degree(self, vertex=0):
        """Exact mean degree of ``vertex`` in the sampled forests."""
        g = self._sample_graph
        p = edge_inclusion_probabilities(g)
        ends = g.edges
        hit = (ends == vertex).any(axis=1)
        if self.mode == "wired":
            hit &= (ends != self._n_int).all(axis=1)
        return float(p[hit].sum())

    def sample(self, rng_seed=None, rng=None):
        g = self._sample_graph
        if rng is None:
            rng = np.random.default_rng(rng_seed)
        chosen = np.asarray(_wilson(g, self._root, rng), dtype=np.int64)
        if self.mode == "wired":
            ends = g.edges[chosen]
            chosen = chosen[(ends != self._n_int).all(axis=1)]
        edges = np.sort(self._edge_ids[chosen])
        ends = self.graph.edges[edges]
        degree = np.bincount(ends.ravel(), minlength=self.graph.n_vertices)
        return ForestSample(self.graph, edges, degree, rng_seed)


def ball_forest(ball, mode="free", rng_seed=None):
    """Uniform spanning tree of the ball (free) or forest of its interior (wired).

    Wired: the outer sphere is contracted to one vertex, a uniform spanning
    tree is drawn, and the contracted vertex's edges are dropped.
    """
    return BallSampler(ball, mode).sample(rng_seed)


# -- statistics ----------------------------------------------------------------


@dataclass(frozen=True)
class DegreeStats:
    n_samples: int
    mean_degree: float
    variance: float
    ci99: float
    confidence: float = CONFIDENCE

    @property
    def std_error(self):
        return math.sqrt(self.variance / self.n_samples)

    @property
    def cost_estimate(self):
        return self.mean_degree / 2

    @property
    def beta1_estimate(self):
        return self.mean_degree / 2 - 1

    @property
    def cost_ci(self):
        return self.ci99 / 2

    def to_dict(self):
        return {
            "samples": self.n_samples,
            "mean_degree": self.mean_degree,
            "variance": self.variance,
            "ci99": self.ci99,
            "cost_estimate": self.cost_estimate,
            "beta1_estimate": self.beta1_estimate,
            "cost_ci99": self.cost_ci,
        }


def degree_stats(degrees, confidence=CONFIDENCE):
    """Normal-approximation summary of integer degree samples."""
    x = np.asarray(degrees, dtype=np.int64)
    n = len(x)
    if n == 0:
        raise ValueError("no samples")
    total = int(x.sum())
    mean = total / n
    if n > 1:
        ss = int((x * x).sum()) - total * total / n
        var = max(ss, 0.0) / (n - 1)
    else:
        var = 0.0
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    return DegreeStats(n, mean, var, z * math.sqrt(var / n), confidence)


def _sample_chunk(args):
    sampler, vertex, seed, replicas, checker = args
    degs = []
    checks_ok = True
    for i in replicas:
        s = sampler.sample(rng=replica_rng(seed, i))
        degs.append(int(s.degree[vertex]))
        if checker is not None:
            checks_ok &= checker(s)
    return degs, checks_ok


def sample_degrees(sampler, vertex, n_samples, seed, n_jobs=1, checker=None):
    """Degree of ``vertex`` in ``n_samples`` independent replicas.

    ``sampler`` needs a ``sample(rng=...)`` method. The result does not depend
    on ``n_jobs``.
    """
    n_samples = check_positive_int(n_samples, "n_samples")
    if n_jobs == 1:
        return _sample_chunk((sampler, vertex, seed, range(n_samples), checker))
    chunks = np.array_split(np.arange(n_samples), n_jobs)
    work = [(sampler, vertex, seed, c.tolist(), checker) for c in chunks if len(c)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(_sample_chunk, work))
    return [d for p, _ in parts for d in p], all(ok for _, ok in parts)


class GraphSampler:
    def __init__(self, graph, root=0):
        self.graph = graph
        self.root = root

    def sample(self, rng_seed=None, rng=None):
        return wilson_ust(self.graph, self.root, rng_seed=rng_seed, rng=rng)


def estimate_beta1(spec, generators, radius, mode="free", n_samples=1000, rng_seed=0,
                   n_jobs=1, cap=None):
    """Degree statistics of the identity in ball forests of the Cayley graph.

    ``beta1_estimate = mean_degree/2 - 1`` estimates the first l2-Betti number
    in free mode (and the cost minus one of the wired forest in wired mode).
    """
    ball = cayley_ball(spec, generators, radius, cap=cap)
    sampler = BallSampler(ball, mode)
    degs, _ = sample_degrees(sampler, 0, n_samples, rng_seed, n_jobs=n_jobs)
    return degree_stats(degs)


def check_rsf_inequality(sample, A):
    """``sum_{x in A} deg_F(x) <= 2|A| + |dA|`` for one sampled forest.

    Holds for every forest; ``A`` must avoid the graph's marked boundary.
    """
    members = sorted({int(v) for v in A})
    bad = [v for v in members if v in sample.graph.boundary]
    if bad:
        raise InteriorityError(f"vertices {bad[:5]} lie on the marked boundary")
    lhs = int(sample.degree[members].sum()) if members else 0
    return lhs <= 2 * len(members) + sample.graph.edge_boundary(members)
