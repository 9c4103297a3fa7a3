"""Edge/inner boundaries, exact ratio minimisation and growth on Cayley balls.

All sets live strictly inside a ball (no member on the outermost sphere), so
every boundary count equals the one in the infinite Cayley graph. Ratios are
exact :class:`fractions.Fraction` values.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import check_interior, check_members, check_positive_int
from .groups import ResourceError, cayley_ball

DEFAULT_NODE_BUDGET = 20_000_000
KAZHDAN_TOL = 1e-12


@dataclass(frozen=True)
class VertexSet:
    ball: object = field(repr=False)
    members: tuple

    def __len__(self):
        return len(self.members)

    @property
    def mask(self):
        m = np.zeros(self.ball.n_vertices, dtype=bool)
        m[list(self.members)] = True
        return m


def vertex_set(ball, members, check=True):
    """Validated :class:`VertexSet`; members must avoid the outer sphere."""
    idx = check_members(members, ball.n_vertices)
    if check:
        check_interior(ball, idx)
    return VertexSet(ball, idx)


def sphere_set(ball, n):
    """The ball ``B(n)`` as a vertex set of a larger ball."""
    return vertex_set(ball, np.flatnonzero(ball.sphere <= n))


@dataclass
class Check:
    name: str
    asserted: bool
    passed: bool
    values: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "asserted": self.asserted, "passed": self.passed,
                "values": self.values}


@dataclass
class BoundaryReport:
    size: int
    edge_boundary: int
    inner_boundary: int
    ratio: Fraction
    folner_ratio: Fraction
    kazhdan_value: float
    n_generators: int
    growth_bound: float | None = None
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks if c.asserted)


def edge_boundary(A):
    """Number of ball edges with exactly one endpoint in ``A``."""
    check_interior(A.ball, A.members)
    m = A.mask
    e = A.ball.edges
    return int(np.count_nonzero(m[e[:, 0]] != m[e[:, 1]]))


def inner_boundary(A):
    """Number of members of ``A`` with at least one neighbour outside ``A``."""
    check_interior(A.ball, A.members)
    m = A.mask
    idx = np.asarray(A.members, dtype=np.int64)
    if idx.size == 0:
        return 0
    nbrs = np.hstack([A.ball.right[idx], A.ball.right_inv[idx]])
    return int(np.count_nonzero((~m[nbrs]).any(axis=1)))


def isolated_members(A):
    """Members of ``A`` with no neighbour inside ``A``."""
    m = A.mask
    idx = np.asarray(A.members, dtype=np.int64)
    if idx.size == 0:
        return []
    nbrs = np.hstack([A.ball.right[idx], A.ball.right_inv[idx]])
    return idx[~m[nbrs].any(axis=1)].tolist()


def translation_defects(A):
    """``|A symmetric-difference A*s|`` for every generator ``s``."""
    check_interior(A.ball, A.members)
    m = A.mask
    idx = np.asarray(A.members, dtype=np.int64)
    # |A \ As| = #{a : a s^-1 not in A},  |As \ A| = #{a : a s not in A}
    out_ = np.count_nonzero(~m[A.ball.right[idx]], axis=0)
    in_ = np.count_nonzero(~m[A.ball.right_inv[idx]], axis=0)
    return (out_ + in_).tolist()


def kazhdan_ratio(A):
    """max over s of ``sqrt(|A symdiff As| / |A|)``.

    This is the displacement of the unit vector supported on ``A^-1`` under
    the regular representation.
    """
    if len(A) == 0:
        raise ValueError("kazhdan_ratio needs a nonempty set")
    return math.sqrt(max(translation_defects(A)) / len(A))


# -- exact minimisation over connected subsets ------------------------------------


def _interior_adjacency(ball):
    """Interior-induced neighbour lists and per-pair edge multiplicities."""
    interior = ball.interior
    nbrs = [[] for _ in range(ball.n_vertices)]
    mult = [dict() for _ in range(ball.n_vertices)]
    for u, v, _ in ball.edges.tolist():
        if not (interior[u] and interior[v]):
            continue
        for a, b in ((u, v), (v, u)):
            if b not in mult[a]:
                nbrs[a].append(b)
                mult[a][b] = 0
            mult[a][b] += 1
    return nbrs, mult


class _Search:
    """ESU enumeration of connected induced subsets, tracking the best ratio."""

    def __init__(self, nbrs, mult, degree, max_size, budget):
        self.nbrs = nbrs
        self.mult = mult
        self.degree = degree
        self.k = max_size
        self.budget = budget
        self.count = 0
        self.best = None  # (boundary, size, sorted members)
        self.visit = None

    def offer(self, sub, bnd):
        self.count += 1
        if self.count > self.budget:
            raise ResourceError(
                f"connected-subset enumeration exceeded the node budget of {self.budget}"
            )
        if self.visit is not None:
            self.visit(sub, bnd)
        best = self.best
        n = len(sub)
        if best is None:
            self.best = (bnd, n, tuple(sorted(sub)))
            return
        lhs, rhs = bnd * best[1], best[0] * n
        if lhs < rhs:
            self.best = (bnd, n, tuple(sorted(sub)))
        elif lhs == rhs:
            cand = tuple(sorted(sub))
            if cand < best[2]:
                self.best = (bnd, n, cand)

    def run_root(self, v):
        ext = [u for u in self.nbrs[v] if u > v]
        closed = {v, *self.nbrs[v]}
        self._extend([v], {v}, closed, ext, v, self.degree[v])

    def _extend(self, sub, sub_set, closed, ext, root, bnd):
        self.offer(sub, bnd)
        if len(sub) == self.k:
            return
        ext = list(ext)
        nbrs, mult = self.nbrs, self.mult
        while ext:
            w = ext.pop()
            inside = sum(c for u, c in mult[w].items() if u in sub_set)
            new_bnd = bnd + self.degree[w] - 2 * inside
            excl = [u for u in nbrs[w] if u > root and u not in closed]
            sub.append(w)
            sub_set.add(w)
            self._extend(sub, sub_set, closed | set(nbrs[w]), ext + excl, root, new_bnd)
            sub.pop()
            sub_set.discard(w)


def enumerate_connected(ball, max_size, visit, node_budget=DEFAULT_NODE_BUDGET, roots=None):
    """Call ``visit(members, edge_boundary)`` once per connected interior set.

    ``members`` is a scratch list (copy it to keep it). Sets are induced
    subgraphs of the interior with at most ``max_size`` vertices.
    """
    nbrs, mult = _interior_adjacency(ball)
    search = _Search(nbrs, mult, ball.degree.tolist(), max_size, node_budget)
    search.visit = visit
    if roots is None:
        roots = np.flatnonzero(ball.interior).tolist()
    for v in roots:
        search.run_root(v)
    return search.count


def _search_roots(args):
    nbrs, mult, degree, max_size, budget, roots = args
    s = _Search(nbrs, mult, degree, max_size, budget)
    for v in roots:
        s.run_root(v)
    return s.best, s.count


def min_ratio_exact(ball, max_size, node_budget=DEFAULT_NODE_BUDGET, n_jobs=1):
    """Exact minimum of ``|dA|/|A|`` over interior sets with ``|A| <= max_size``.

    Only connected sets are enumerated: the ratio of a disjoint union is a
    mediant of the components' ratios, so some connected set is optimal.
    Ties go to the lexicographically smallest sorted index tuple. Returns
    ``(VertexSet, Fraction, n_enumerated)``.
    """
    max_size = check_positive_int(max_size, "max_size")
    roots = np.flatnonzero(ball.interior).tolist()
    if not roots:
        raise ValueError("ball interior is empty (radius must be >= 1)")
    nbrs, mult = _interior_adjacency(ball)
    degree = ball.degree.tolist()
    if n_jobs == 1:
        results = [_search_roots((nbrs, mult, degree, max_size, node_budget, roots))]
    else:
        chunks = [roots[i::n_jobs] for i in range(n_jobs)]
        work = [(nbrs, mult, degree, max_size, node_budget, c) for c in chunks if c]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_search_roots, work))
    total = sum(c for _, c in results)
    if total > node_budget:
        raise ResourceError(
            f"connected-subset enumeration exceeded the node budget of {node_budget}"
        )
    best = None
    for cand, _ in results:
        if cand is None:
            continue
        if best is None:
            best = cand
            continue
        lhs, rhs = cand[0] * best[1], best[0] * cand[1]
        if lhs < rhs or (lhs == rhs and cand[2] < best[2]):
            best = cand
    bnd, n, members = best
    return VertexSet(ball, members), Fraction(bnd, n), total


# -- profiles and growth ----------------------------------------------------------


@dataclass(frozen=True)
class ProfileRow:
    n: int
    ball: int
    boundary: int
    ratio: Fraction


def ratio_profile(spec, generators, r_max, cap=None):
    """Boundary ratio of ``B(n)`` for ``n = 1..r_max``, computed inside ``B(r_max+1)``."""
    r_max = check_positive_int(r_max, "r_max")
    big = cayley_ball(spec, generators, r_max + 1, cap=cap)
    rows = []
    for n in range(1, r_max + 1):
        A = sphere_set(big, n)
        b = edge_boundary(A)
        rows.append(ProfileRow(n, len(A), b, Fraction(b, len(A))))
    return rows


@dataclass(frozen=True)
class GrowthEstimate:
    estimate: float
    root_estimate: float
    sphere_ratios: list


def growth_rate(ball_sizes):
    """Estimate the exponential growth rate from ``[|B(0)|, |B(1)|, ...]``.

    ``estimate`` is the last sphere ratio ``|S(n)|/|S(n-1)|`` (1.0 once the
    ball has saturated, i.e. for finite groups). ``root_estimate`` is
    ``|B(n)|**(1/n)``: same limit, but biased upward by the ``c**(1/n)``
    factor of the ball-size prefactor. ``sphere_ratios`` lists every
    ``|S(i+1)|/|S(i)|``.
    """
    sizes = [int(b) for b in ball_sizes]
    if len(sizes) < 2:
        raise ValueError("growth_rate needs at least two radii")
    n = len(sizes) - 1
    spheres = [sizes[0]] + [sizes[i] - sizes[i - 1] for i in range(1, len(sizes))]
    ratios = [spheres[i + 1] / spheres[i] for i in range(n) if spheres[i]]
    estimate = 1.0 if spheres[n] == 0 else spheres[n] / spheres[n - 1]
    return GrowthEstimate(
        estimate=estimate,
        root_estimate=sizes[n] ** (1.0 / n),
        sphere_ratios=ratios,
    )


def growth_bound(n_generators, omega):
    """Upper bound ``(2|S|-1)(1 - 1/omega)`` on the isoperimetric constant."""
    return (2 * n_generators - 1) * (1.0 - 1.0 / omega)


def check_comparisons(A, growth=None):
    """Boundary report with the Følner sandwich and displacement checks.

    The sandwich ``fol <= ratio <= (2|S|-1) fol`` is asserted only when no
    member of ``A`` is isolated in the induced subgraph; the displacement
    bound ``kazhdan <= sqrt(ratio)`` is always asserted (to 1e-12). A
    growth estimate, if given, only adds the growth bound to the report.
    """
    if len(A) == 0:
        raise ValueError("check_comparisons needs a nonempty set")
    eb = edge_boundary(A)
    ib = inner_boundary(A)
    n = len(A)
    k = len(A.ball.generators)
    ratio, fol = Fraction(eb, n), Fraction(ib, n)
    kaz = kazhdan_ratio(A)
    rep = BoundaryReport(n, eb, ib, ratio, fol, kaz, k)
    isolated = isolated_members(A)
    if isolated:
        rep.checks.append(Check("folner_sandwich", False, True,
                                {"skipped": "isolated vertices", "isolated": isolated[:10]}))
    else:
        ok = fol <= ratio <= (2 * k - 1) * fol
        rep.checks.append(Check("folner_sandwich", True, ok,
                                {"folner": fol, "ratio": ratio, "upper": (2 * k - 1) * fol}))
    bound = math.sqrt(float(ratio))
    rep.checks.append(Check("kazhdan_displacement", True, kaz <= bound + KAZHDAN_TOL,
                            {"kazhdan": kaz, "sqrt_ratio": bound}))
    if growth is not None:
        rep.growth_bound = growth_bound(k, growth)
        rep.checks.append(Check("growth_bound", False, True,
                                {"omega_estimate": growth, "bound": rep.growth_bound,
                                 "ratio": ratio}))
    return rep
