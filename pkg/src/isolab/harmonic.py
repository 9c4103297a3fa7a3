"""Harmonic 1-chains on a finite ball.

On a ball of radius r the harmonic space is the set of edge functions with
zero net flux at every interior vertex (sphere <= r-1) that are orthogonal
to every cycle of the subgraph induced on the interior. Its projector ``P``
is never formed densely for large balls: with ``D_int`` the incidence
rows of interior vertices and ``D_in`` the incidence of the interior
subgraph,

    P = I_outer - D_int^T L_int^+ D_int + D_in^T L_in^+ D_in,

where ``I_outer`` keeps edges that are not interior-interior, and both
Laplacians are factorised once (sparse LU) after grounding one vertex in
every component they leave floating. For an interior edge this gives
``P[e, e] = R_free(e) - R_wired(e)``, the difference of effective
resistances in the interior graph and in the ball with its outer sphere
grounded.

A dense SVD construction (:func:`harmonic_basis_dense`) is kept for small
complexes; it serves as an independent check of the Laplacian route.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from ._validation import InteriorityError
from .isoperimetry import Check, VertexSet, edge_boundary

DENSE_EDGE_LIMIT = 2000
RANK_RTOL = 1e-8
BASIS_TOL = 1e-10


class NumericalRankError(RuntimeError):
    pass


@dataclass(eq=False)
class ChainComplex:
    """Oriented 1-complex with an interior mask.

    ``edges[e] = (tail, head)``; from a ball, the tail is the endpoint with the
    smaller sphere index (ties: smaller vertex index).
    """

    n_vertices: int
    edges: np.ndarray
    interior: np.ndarray
    ball: object = field(default=None, repr=False)
    identity_edges: tuple = ()

    @classmethod
    def from_ball(cls, ball):
        if ball.radius < 1:
            raise ValueError("ball radius must be >= 1")
        u, v = ball.edges[:, 0], ball.edges[:, 1]
        su, sv = ball.sphere[u], ball.sphere[v]
        swap = (sv < su) | ((sv == su) & (v < u))
        tail = np.where(swap, v, u)
        head = np.where(swap, u, v)
        ident = []
        for j in range(len(ball.generators)):
            hits = np.flatnonzero((u == 0) & (ball.edges[:, 2] == j))
            ident.append(int(hits[0]) if hits.size else -1)
        return cls(ball.n_vertices, np.column_stack([tail, head]), ball.interior.copy(),
                   ball=ball, identity_edges=tuple(ident))

    @classmethod
    def from_graph(cls, graph, interior=None):
        """Complex of a :class:`~isolab.forests.FiniteGraph`; all vertices interior by default."""
        if interior is None:
            interior = np.ones(graph.n_vertices, dtype=bool)
        e = np.sort(graph.edges, axis=1)
        return cls(graph.n_vertices, e, np.asarray(interior, dtype=bool))

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def boundary_matrix(self):
        m = self.n_edges
        cols = np.repeat(np.arange(m), 2)
        rows = self.edges[:, ::-1].ravel()  # head, tail
        data = np.tile([1.0, -1.0], m)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n_vertices, m))

    @cached_property
    def inner_edges(self):
        """Mask of edges with both endpoints interior."""
        return self.interior[self.edges[:, 0]] & self.interior[self.edges[:, 1]]

    @cached_property
    def interior_index(self):
        return np.flatnonzero(self.interior)


@dataclass
class Subspace:
    dim: int
    basis: np.ndarray | None = None


def _components(n, edges):
    if len(edges) == 0:
        return n, np.arange(n)
    a = sp.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(a, directed=False)


def relative_cycle_dim(cc):
    """``|E| - rank(D_int)``; a component is rank-deficient only if fully interior."""
    nc, lab = _components(cc.n_vertices, cc.edges)
    touches = np.zeros(nc, dtype=bool)
    touches[lab[~cc.interior]] = True
    floating = np.count_nonzero(~touches)
    return cc.n_edges - (int(cc.interior.sum()) - floating)


def inner_cycle_dim(cc):
    """Euler formula on the interior-induced subgraph."""
    idx = cc.interior_index
    e = cc.edges[cc.inner_edges]
    remap = np.full(cc.n_vertices, -1)
    remap[idx] = np.arange(len(idx))
    nc, _ = _components(len(idx), remap[e])
    return int(len(e) - len(idx) + nc)


def _null_space(mat, expected):
    if mat.shape[0] == 0:
        ns = np.eye(mat.shape[1])
    else:
        ns = scipy.linalg.null_space(mat, rcond=RANK_RTOL)
    if ns.shape[1] != expected:
        raise NumericalRankError(
            f"numerical null space has dimension {ns.shape[1]}, expected {expected}"
        )
    return ns


def _want_dense(cc, dense):
    return cc.n_edges <= DENSE_EDGE_LIMIT if dense is None else dense


def relative_cycle_space(cc, dense=None):
    """Edge functions with zero flux at interior vertices."""
    dim = relative_cycle_dim(cc)
    if not _want_dense(cc, dense):
        return Subspace(dim)
    D = cc.boundary_matrix[cc.interior_index].toarray()
    return Subspace(dim, _null_space(D, dim))


def inner_cycle_space(cc, dense=None):
    """Cycle space of the interior-induced subgraph, in edge coordinates."""
    dim = inner_cycle_dim(cc)
    if not _want_dense(cc, dense):
        return Subspace(dim)
    cols = np.flatnonzero(cc.inner_edges)
    D = cc.boundary_matrix[cc.interior_index][:, cols].toarray()
    basis = np.zeros((cc.n_edges, dim))
    if cols.size:
        basis[cols] = _null_space(D, dim)
    return Subspace(dim, basis)


def harmonic_basis_dense(cc):
    """Orthonormal basis of relative cycles orthogonal to inner cycles (SVD route)."""
    K = relative_cycle_space(cc, dense=True).basis
    Z = inner_cycle_space(cc, dense=True).basis
    M = K - Z @ (Z.T @ K)
    dim = K.shape[1] - Z.shape[1]
    if dim == 0:
        return np.zeros((cc.n_edges, 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[dim - 1] < RANK_RTOL * max(s[0], 1.0) or (len(s) > dim and s[dim] > 1e-6):
        raise NumericalRankError("harmonic basis rank is not numerically separated")
    return U[:, :dim]


class _GroundedSolver:
    """Solves ``L x = b`` for ``L = D_R D_R^T`` (rows R of an incidence matrix).

    One vertex per component of the edge graph that lies entirely inside R is
    grounded; right-hand sides that come from edge boundaries are orthogonal
    to those components' constants, so the grounded solution is exact up to
    a per-component constant that ``D^T`` annihilates.
    """

    def __init__(self, n_vertices, edges, rows):
        rows = np.asarray(rows)
        in_r = np.zeros(n_vertices, dtype=bool)
        in_r[rows] = True
        nc, lab = _components(n_vertices, edges)
        escapes = np.zeros(nc, dtype=bool)
        escapes[lab[~in_r]] = True
        grounded = set()
        for c in np.flatnonzero(~escapes):
            members = np.flatnonzero((lab == c) & in_r)
            if members.size:
                grounded.add(int(members[0]))
        keep = np.array([v for v in rows.tolist() if v not in grounded], dtype=np.int64)
        self.keep = keep
        self.pos = np.full(n_vertices, -1)
        self.pos[keep] = np.arange(len(keep))
        m = len(edges)
        if len(keep) == 0:
            self.D = sp.csr_matrix((0, m))
            self.lu = None
            return
        cols = np.repeat(np.arange(m), 2)
        full_rows = edges[:, ::-1].ravel()
        data = np.tile([1.0, -1.0], m)
        sel = self.pos[full_rows] >= 0
        self.D = sp.csr_matrix((data[sel], (self.pos[full_rows][sel], cols[sel])),
                               shape=(len(keep), m))
        L = (self.D @ self.D.T).tocsc()
        self.lu = splu(L)

    def project(self, X):
        """``D^T L^+ D X`` for a dense (m, k) block ``X``."""
        if self.lu is None:
            return np.zeros_like(X)
        rhs = self.D @ X
        return self.D.T @ self.lu.solve(np.asarray(rhs))


@dataclass(eq=False)
class HarmonicSpace:
    complex: ChainComplex
    dim: int

    @cached_property
    def _wired(self):
        cc = self.complex
        return _GroundedSolver(cc.n_vertices, cc.edges, cc.interior_index)

    @cached_property
    def _free(self):
        cc = self.complex
        # interior subgraph only; other edges have no free-cut component
        inner = cc.edges[cc.inner_edges]
        solver = _GroundedSolver(cc.n_vertices, inner, cc.interior_index)
        solver.columns = np.flatnonzero(cc.inner_edges)
        return solver

    def columns(self, edge_ids):
        """Dense block ``P[:, edge_ids]``."""
        cc = self.complex
        ids = np.asarray(edge_ids, dtype=np.int64).ravel()
        m = cc.n_edges
        X = np.zeros((m, len(ids)))
        X[ids, np.arange(len(ids))] = 1.0
        out = X * (~cc.inner_edges)[:, None]
        out -= self._wired.project(X)
        free = self._free
        if free.columns.size:
            Xi = X[free.columns]
            out[free.columns] += free.project(Xi)
        return out

    def diagonal(self, edge_ids):
        ids = np.asarray(edge_ids, dtype=np.int64).ravel()
        cols = self.columns(ids)
        return cols[ids, np.arange(len(ids))]

    @cached_property
    def basis(self):
        """Dense orthonormal basis (small complexes only)."""
        if self.complex.n_edges > DENSE_EDGE_LIMIT:
            raise MemoryError(
                f"dense basis requested for {self.complex.n_edges} edges "
                f"(limit {DENSE_EDGE_LIMIT})"
            )
        return harmonic_basis_dense(self.complex)


def harmonic_projector(cc):
    """The harmonic space of ``cc`` with an implicit projector."""
    return HarmonicSpace(cc, relative_cycle_dim(cc) - inner_cycle_dim(cc))


def center_trace(h):
    """Sum over generators s of ``<P d_(e,s), d_(e,s)>`` at the identity."""
    ids = h.complex.identity_edges
    if not ids or min(ids) < 0:
        raise ValueError("some generator edge at the identity is missing")
    if not all(h.complex.inner_edges[list(ids)]):
        raise ValueError("identity edges must be interior (radius >= 2)")
    return float(h.diagonal(list(ids)).sum())


# -- restriction ranks -------------------------------------------------------------


@dataclass
class RankCheck:
    rank_AS: int
    rank_boundary: int
    equal: bool
    n_AS: int
    n_boundary: int
    gap_AS: float
    gap_boundary: float

    def to_dict(self):
        return {"rank_AS": self.rank_AS, "rank_bd": self.rank_boundary, "equal": self.equal,
                "n_AS": self.n_AS, "n_bd": self.n_boundary,
                "gap": min(self.gap_AS, self.gap_boundary)}


def _rank_and_gap(block):
    """Numerical rank of a dense block and the gap at the cut (inf if none)."""
    if block.size == 0:
        return 0, float("inf")
    s = np.linalg.svd(block, compute_uv=False)
    if s[0] == 0:
        return 0, float("inf")
    rank = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    if rank == len(s):
        return rank, float("inf")
    return rank, float(s[rank - 1] / s[rank]) if s[rank] > 0 else float("inf")


def _edge_sets(ball, A):
    m = A.mask
    e = ball.edges
    mu, mv = m[e[:, 0]], m[e[:, 1]]
    return np.flatnonzero(mu | mv), np.flatnonzero(mu != mv)


def check_admissible(h, A):
    ball = h.complex.ball
    if ball is None or A.ball is not ball:
        raise ValueError("vertex set and harmonic space come from different balls")
    if len(A) == 0:
        return
    idx = np.asarray(A.members)
    nbrs = np.hstack([ball.right[idx], ball.right_inv[idx]])
    if (nbrs < 0).any() or (ball.sphere[nbrs] > ball.radius - 1).any():
        raise InteriorityError(
            "the set and all its neighbours must lie in B(radius-1)"
        )


def restriction_rank_check(h, A):
    """Ranks of the harmonic space restricted to A_S and to dA.

    ``A_S`` is the set of edges with a vertex in ``A``. Singular values of the
    restriction to an edge set ``W`` equal those of the block ``P[:, W]``.
    """
    check_admissible(h, A)
    if len(A) == 0:
        return RankCheck(0, 0, True, 0, 0, float("inf"), float("inf"))
    AS, bd = _edge_sets(h.complex.ball, A)
    cols = h.columns(AS)
    r_as, g_as = _rank_and_gap(cols)
    r_bd, g_bd = _rank_and_gap(cols[:, np.isin(AS, bd)])
    return RankCheck(r_as, r_bd, r_as == r_bd, len(AS), len(bd), g_as, g_bd)


@dataclass
class CGReport:
    size: int
    center_trace: float
    rank_AS: int
    rank_boundary: int
    edge_boundary: int
    rank_ratio: float
    boundary_ratio: float
    checks: list

    @property
    def ok(self):
        return all(c.passed for c in self.checks if c.asserted)


def cg_inequality_report(h, A):
    """Finite-ball version of the trace / restriction / boundary chain.

    Asserted: ``rank_AS == rank_bd <= |dA|``. Informational: ``center_trace
    <= rank_AS/|A|`` (exact only on the infinite graph).
    """
    if not isinstance(A, VertexSet) or len(A) == 0:
        raise ValueError("cg_inequality_report needs a nonempty vertex set")
    rc = restriction_rank_check(h, A)
    eb = edge_boundary(A)
    tr = center_trace(h)
    n = len(A)
    checks = [
        Check("restriction_rank_equal", True, rc.equal,
              {"rank_AS": rc.rank_AS, "rank_bd": rc.rank_boundary}),
        Check("rank_le_boundary", True, rc.rank_boundary <= eb,
              {"rank_bd": rc.rank_boundary, "edge_boundary": eb}),
        Check("trace_le_rank_ratio", False, tr <= rc.rank_AS / n + 1e-9,
              {"center_trace": tr, "rank_ratio": rc.rank_AS / n}),
    ]
    return CGReport(n, tr, rc.rank_AS, rc.rank_boundary, eb, rc.rank_AS / n, eb / n, checks)


def known_beta1(spec):
    """First l2-Betti number of the groups the parser accepts.

    ``F_k``: k-1. Infinite amenable groups and finite groups: 0 (for finite
    groups the normalised value is 0 as well). Products of two infinite
    groups: 0. ``G x H`` with ``H`` finite of order m: ``beta1(G)/m``.
    """
    if spec.kind == "free":
        return float(spec.rank - 1)
    if spec.kind in ("free_abelian", "finite"):
        return 0.0
    left, right = spec.left, spec.right
    if left.order is not None and right.order is not None:
        return 0.0
    if right.order is not None:
        return known_beta1(left) / right.order
    if left.order is not None:
        return known_beta1(right) / left.order
    return 0.0
