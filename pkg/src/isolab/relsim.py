"""Finite models of measure-preserving graphings.

The space is ``{0, ..., N-1}`` with every point of mass ``1/N``. Partial
injections are measure preserving by construction, so costs and
isoperimetric ratios are exact rationals. A symmetric vertex is a
permutation whose graph lies in the generated relation; a witness family
is a list of pairwise disjoint ones (no two agree at any point).

In the fibre over ``x`` the Cayley graph of a graphing ``K`` has vertex set
the class of ``x``; every pair ``(y, z)`` of every map of ``K`` is one edge
between ``y`` and ``z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .isoperimetry import Check


class RelsimError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PartialInjection:
    src: np.ndarray
    dst: np.ndarray

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).ravel()
        dst = np.asarray(self.dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise RelsimError("src and dst must have the same length")
        if len(np.unique(src)) != len(src) or len(np.unique(dst)) != len(dst):
            raise RelsimError("partial injection must have distinct sources and targets")
        order = np.argsort(src, kind="stable")
        object.__setattr__(self, "src", src[order])
        object.__setattr__(self, "dst", dst[order])

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            return cls(np.empty(0, np.int64), np.empty(0, np.int64))
        a = np.asarray(pairs, dtype=np.int64)
        return cls(a[:, 0], a[:, 1])

    @classmethod
    def from_permutation(cls, perm):
        perm = np.asarray(perm, dtype=np.int64)
        return cls(np.arange(len(perm)), perm)

    def __len__(self):
        return len(self.src)

    def pairs(self):
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def forward(self, N):
        """Array ``f`` with ``f[x] = phi(x)`` on the domain and ``-1`` elsewhere."""
        f = np.full(N, -1, dtype=np.int64)
        f[self.src] = self.dst
        return f


@dataclass(eq=False)
class Graphing:
    N: int
    maps: list = field(default_factory=list)

    def __post_init__(self):
        if self.N < 2:
            raise RelsimError(f"the space needs N >= 2 points, got {self.N}")
        for m in self.maps:
            if len(m) and (min(m.src.min(), m.dst.min()) < 0
                           or max(m.src.max(), m.dst.max()) >= self.N):
                raise RelsimError("point out of range")

    def pairs(self):
        """All (map index, x, y) triples, map by map."""
        return [(i, x, y) for i, m in enumerate(self.maps) for x, y in m.pairs()]


def cycle_permutation(N, step=1):
    return (np.arange(N) + step) % N


def compose_power(perm, k):
    """``perm`` composed with itself ``k`` times (``k >= 0``)."""
    perm = np.asarray(perm, dtype=np.int64)
    out = np.arange(len(perm))
    base = perm.copy()
    while k:
        if k & 1:
            out = base[out]
        base = base[base]
        k >>= 1
    return out


# -- orbits and cost -----------------------------------------------------------


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.size[x] < self.size[y]:
            x, y = y, x
        self.parent[y] = x
        self.size[x] += self.size[y]
        return True


def orbit_labels(g):
    """Class label per point (the smallest point of its class)."""
    uf = UnionFind(g.N)
    for m in g.maps:
        for x, y in zip(m.src.tolist(), m.dst.tolist()):
            uf.union(x, y)
    roots = np.array([uf.find(x) for x in range(g.N)])
    least = np.full(g.N, g.N)
    np.minimum.at(least, roots, np.arange(g.N))
    return least[roots]


def orbit_partition(g):
    """Orbit classes of the generated relation, each sorted, ordered by least point."""
    labels = orbit_labels(g)
    classes = {}
    for x, c in enumerate(labels.tolist()):
        classes.setdefault(c, []).append(x)
    return [classes[c] for c in sorted(classes)]


def cost(g):
    """Sum of domain measures, exact."""
    return Fraction(sum(len(m) for m in g.maps), g.N)


# -- Rokhlin towers and the cost-one construction ---------------------------------


def rokhlin_tower(phi, n):
    """Levels ``B_1..B_n`` with ``phi(B_i) = B_{i+1}`` for a single N-cycle ``phi``.

    The orbit of 0 is cut into consecutive blocks of length ``n``; the leftover
    block (fewer than ``n`` points) is the residual. Requires ``N >= 4(n-1)``
    so the residual has measure at most 1/4.
    """
    phi = np.asarray(phi, dtype=np.int64)
    N = len(phi)
    if n < 1:
        raise RelsimError(f"tower height must be >= 1, got {n}")
    if N < 4 * (n - 1):
        raise RelsimError(f"need N >= 4(n-1) = {4 * (n - 1)}, got N = {N}")
    orbit = [0]
    for _ in range(N - 1):
        orbit.append(int(phi[orbit[-1]]))
    if len(set(orbit)) != N or phi[orbit[-1]] != 0:
        raise RelsimError("phi is not a single N-cycle")
    q = N // n
    levels = [sorted(orbit[i:q * n:n]) for i in range(n)]
    residual = sorted(orbit[q * n:])
    return levels, residual


def build_hzero_graphing(N, n, eps):
    """Graphing ``(phi, psi)``: ``phi`` the N-cycle, ``psi`` of cost ``ceil(eps N)/N``.

    ``psi`` shifts points of the first level of a height-(n+1) tower, so its
    domain and its image each meet every segment ``x, phi(x), ..., phi^n(x)``
    in at most one point.
    """
    m = math.ceil(Fraction(eps).limit_denominator(10**12) * N)
    if m < 1:
        raise RelsimError("ceil(eps * N) must be >= 1")
    phi = cycle_permutation(N)
    levels, _ = rokhlin_tower(phi, n + 1)
    base = levels[0]
    L = len(base)
    if m > L or L < 2:
        raise RelsimError(
            f"psi needs {m} points but the tower level has only {L}; lower eps or n"
        )
    src = base[:m]
    dst = [base[(j + 1) % L] for j in range(m)]
    return Graphing(N, [PartialInjection.from_permutation(phi),
                        PartialInjection(np.array(src), np.array(dst))])


def segment_property(g_hzero, n):
    """Max number of points of dom(psi) and of im(psi) in any phi-segment of n+1 points."""
    N = g_hzero.N
    psi = g_hzero.maps[1]
    worst = 0
    for pts in (psi.src, psi.dst):
        ind = np.zeros(N, dtype=np.int64)
        ind[pts] = 1
        window = np.convolve(np.concatenate([ind, ind[:n]]), np.ones(n + 1, dtype=np.int64),
                             mode="valid")[:N]
        worst = max(worst, int(window.max()))
    return worst


# -- witness families and fibre boundaries -------------------------------------------


def power_family(phi, exponents):
    return [compose_power(phi, k) for k in exponents]


def check_witness(g, family, labels=None):
    """Validate bijectivity, containment in the relation and pairwise disjointness."""
    if not family:
        raise RelsimError("witness family is empty")
    W = np.vstack([np.asarray(w, dtype=np.int64) for w in family])
    if W.shape[1] != g.N:
        raise RelsimError("witness permutations must act on all N points")
    for w in W:
        if not np.array_equal(np.sort(w), np.arange(g.N)):
            raise RelsimError("witness entry is not a permutation")
    labels = orbit_labels(g) if labels is None else labels
    if not (labels[W] == labels[None, :]).all():
        raise RelsimError("a witness permutation leaves the generated relation")
    cols = np.sort(W, axis=0)
    if (cols[1:] == cols[:-1]).any():
        raise RelsimError("witness permutations are not pairwise disjoint")
    return W


def fibre_boundaries(g, W):
    """``|dA^x|`` for every point ``x``, where ``A^x = {w(x) : w in W}``.

    ``W`` is a (k, N) array of disjoint permutations.
    """
    N = g.N
    rows = W.T  # rows[x] = A^x
    deg = np.zeros(N, dtype=np.int64)
    for m in g.maps:
        np.add.at(deg, m.src, 1)
        np.add.at(deg, m.dst, 1)
    total = deg[rows].sum(axis=1)
    # membership of (x, z) via sorted keys x*N + z
    keys = np.sort((np.arange(N)[:, None] * N + rows).ravel())
    internal = np.zeros(N, dtype=np.int64)
    for m in g.maps:
        fwd = m.forward(N)
        z = fwd[rows]
        has = z >= 0
        q = np.arange(N)[:, None] * N + np.where(has, z, 0)
        pos = np.searchsorted(keys, q)
        pos = np.minimum(pos, len(keys) - 1)
        hit = has & (keys[pos] == q)
        internal += hit.sum(axis=1)
    return total - 2 * internal


def witness_ratio(g, family):
    """``(1/(N|W|)) * sum_x |dA^x|`` as an exact fraction."""
    W = check_witness(g, family)
    b = fibre_boundaries(g, W)
    return Fraction(int(b.sum()), g.N * W.shape[0])


# -- treeings and the main inequality --------------------------------------------


def spanning_treeing(g):
    """Sub-graphing keeping the pairs that grow a spanning forest of each class."""
    uf = UnionFind(g.N)
    maps = []
    for m in g.maps:
        keep = [uf.union(x, y) for x, y in zip(m.src.tolist(), m.dst.tolist())]
        keep = np.asarray(keep, dtype=bool)
        maps.append(PartialInjection(m.src[keep], m.dst[keep]))
    return Graphing(g.N, maps)


def degrees(g):
    d = np.zeros(g.N, dtype=np.int64)
    for m in g.maps:
        np.add.at(d, m.src, 1)
        np.add.at(d, m.dst, 1)
    return d


@dataclass
class MainReport:
    cost: Fraction
    cost_treeing: Fraction
    n_classes: int
    witness_ratio: Fraction
    checks: list

    @property
    def ok(self):
        return all(c.passed for c in self.checks if c.asserted)

    def to_dict(self):
        return {"cost": self.cost, "cost_treeing": self.cost_treeing,
                "classes": self.n_classes, "witness_ratio": self.witness_ratio,
                "checks": [c.to_dict() for c in self.checks]}


def check_main_inequality(g, family):
    """``2 C(F) <= 2 + ratio`` for the spanning treeing ``F`` of ``g``.

    Also asserts the degree identity ``C(F) = sum_x deg_F(x) / (2N)``, the
    class count ``C(F) = (N - #classes)/N`` and, fibre by fibre,
    ``deg_F(A^x) <= 2|A| + |d_K A^x|``.
    """
    W = check_witness(g, family)
    F = spanning_treeing(g)
    cF = cost(F)
    ratio = Fraction(int(fibre_boundaries(g, W).sum()), g.N * W.shape[0])
    n_classes = len(orbit_partition(g))
    degF = degrees(F)
    fibre_deg = degF[W.T].sum(axis=1)
    fibre_ok = bool((fibre_deg <= 2 * W.shape[0] + fibre_boundaries(g, W)).all())
    checks = [
        Check("main_inequality", True, 2 * cF <= 2 + ratio,
              {"two_cost_treeing": 2 * cF, "rhs": 2 + ratio}),
        Check("treeing_degree_identity", True, cF == Fraction(int(degF.sum()), 2 * g.N),
              {"sum_degree": int(degF.sum())}),
        Check("treeing_cost_classes", True, cF == Fraction(g.N - n_classes, g.N),
              {"classes": n_classes}),
        Check("fibre_degree_bound", True, fibre_ok, {}),
    ]
    return MainReport(cost(g), cF, n_classes, ratio, checks)


def random_graphing(N, n_maps, density, rng):
    """Random partial injections with domain size about ``density * N`` each."""
    maps = []
    for _ in range(n_maps):
        size = int(rng.binomial(N, density))
        src = rng.choice(N, size=size, replace=False)
        dst = rng.choice(N, size=size, replace=False)
        maps.append(PartialInjection(src, dst))
    return Graphing(N, maps)


def class_cycle(g, rng=None):
    """A permutation cycling each orbit class (random order if ``rng`` given)."""
    perm = np.arange(g.N)
    for cls in orbit_partition(g):
        pts = list(cls)
        if rng is not None:
            pts = rng.permutation(pts).tolist()
        for a, b in zip(pts, pts[1:] + pts[:1]):
            perm[a] = b
    return perm


def random_scenario(N, rng, n_maps=3, density=0.4, max_family=8):
    """Random graphing plus a disjoint power-of-cycle witness family."""
    g = random_graphing(N, n_maps, density, rng)
    phi = class_cycle(g, rng)
    smallest = min(len(c) for c in orbit_partition(g))
    top = max(1, min(max_family, smallest))
    k = int(rng.integers(1, top + 1))
    exps = sorted(rng.choice(smallest, size=k, replace=False).tolist()) if smallest > 1 else [0]
    return g, power_family(phi, exps)


# -- compression -----------------------------------------------------------------------


@dataclass
class CompressReport:
    N: int
    n_Y: int
    n_parts: int
    part_size: int
    k: int
    lifted_boundary: Fraction  # nu(d_{K'} A')
    base_boundary: Fraction  # nu_1(d_K A), normalised on Y
    bound: Fraction
    lifted_ratio: Fraction
    base_ratio: Fraction
    graphing: Graphing = field(repr=False)
    family: list = field(repr=False)
    checks: list = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks if c.asserted)

    def to_dict(self):
        return {
            "N": self.N, "n_Y": self.n_Y, "n": self.n_parts, "part_size": self.part_size,
            "k": self.k, "delta": Fraction(self.part_size, self.N),
            "mu_Y": Fraction(self.n_Y, self.N),
            "lifted_boundary": self.lifted_boundary, "base_boundary": self.base_boundary,
            "bound": self.bound, "lifted_ratio": self.lifted_ratio,
            "base_ratio": self.base_ratio,
            "checks": [c.to_dict() for c in self.checks],
        }


def _restrict(g, Y):
    """Relabel a graphing supported on ``Y`` to ``0..|Y|-1``."""
    pos = np.full(g.N, -1, dtype=np.int64)
    pos[Y] = np.arange(len(Y))
    maps = []
    for m in g.maps:
        if len(m) and ((pos[m.src] < 0).any() or (pos[m.dst] < 0).any()):
            raise RelsimError("graphing K must be supported on Y")
        maps.append(PartialInjection(pos[m.src], pos[m.dst]))
    return Graphing(len(Y), maps), pos


def compress(g, Y, family, n, delta):
    """Lift a witness family on ``Y`` to ``X`` through an n-cycle on ``X \\ Y``.

    ``g`` is a graphing on ``X = {0..N-1}`` supported on ``Y``; ``family``
    holds length-N arrays whose restriction to ``Y`` is a permutation of
    ``Y`` (entries off ``Y`` are ignored). ``X \\ Y`` is cut into ``n`` parts
    of ``delta*N`` points cycled by ``phi``, and ``theta`` maps the first
    ``delta*N`` points of ``Y`` onto part 0. Each ``psi_j`` becomes
    ``phi^j`` off ``Y`` and ``psi_j`` on ``Y``. Asserts
    ``nu(d_{K'} A') <= mu(Y) nu_1(d_K A) + k delta + 3 mu(X \\ Y)``
    together with its pointwise form.
    """
    N = g.N
    Y = np.asarray(sorted({int(y) for y in Y}), dtype=np.int64)
    if len(Y) == 0:
        raise RelsimError("Y must be nonempty")
    outside = np.setdiff1d(np.arange(N), Y)
    k = len(family)
    delta = Fraction(delta).limit_denominator(10**12)
    d = delta * N
    if d.denominator != 1:
        raise RelsimError(f"delta * N = {d} is not an integer")
    d = int(d)
    gY, pos = _restrict(g, Y)
    famY = []
    for w in family:
        w = np.asarray(w, dtype=np.int64)
        wy = pos[w[Y]]
        if (wy < 0).any():
            raise RelsimError("witness does not map Y into Y")
        famY.append(wy)
    WY = check_witness(gY, famY)
    base_b = fibre_boundaries(gY, WY)
    base_boundary = Fraction(int(base_b.sum()), len(Y))
    base_ratio = base_boundary / k

    if len(outside) == 0:
        lifted = Fraction(int(base_b.sum()), N)
        bound = Fraction(len(Y), N) * base_boundary
        checks = [Check("compression_bound", True, lifted <= bound,
                        {"lhs": lifted, "rhs": bound})]
        return CompressReport(N, len(Y), 0, 0, k, lifted, base_boundary, bound,
                              lifted / k, base_ratio, g, list(family), checks)

    if n <= k:
        raise RelsimError(f"need n > k (n={n}, k={k})")
    if n < 2:
        raise RelsimError("need n >= 2 parts")
    if d < 1 or d * n != len(outside):
        raise RelsimError(
            f"|X \\ Y| = {len(outside)} is not n * delta * N = {n} * {d}"
        )
    if d > len(Y):
        raise RelsimError("Y has fewer than delta * N points for Z")
    parts = outside.reshape(n, d)
    phi = np.arange(N)
    for i in range(n):
        phi[parts[i]] = parts[(i + 1) % n]
    Z = Y[:d]
    theta = PartialInjection(Z, parts[0])
    phi_map = PartialInjection(outside, phi[outside])
    K2 = Graphing(N, list(g.maps) + [theta, phi_map])

    lifted_family = []
    for j, w in enumerate(family, start=1):
        w = np.asarray(w, dtype=np.int64)
        lift = compose_power(phi, j)
        lift[Y] = w[Y]
        lifted_family.append(lift)
    W2 = check_witness(K2, lifted_family)
    b2 = fibre_boundaries(K2, W2)
    lifted = Fraction(int(b2.sum()), N)
    bound = (Fraction(len(Y), N) * base_boundary + k * Fraction(d, N)
             + 3 * Fraction(len(outside), N))

    in_Z = np.zeros(N, dtype=bool)
    in_Z[Z] = True
    hits_Z = in_Z[np.vstack([np.asarray(w)[Y] for w in family])].sum(axis=0)
    pointwise_Y = bool((b2[Y] <= base_b + hits_Z).all())
    pointwise_out = bool((b2[outside] <= 3).all())
    checks = [
        Check("compression_bound", True, lifted <= bound, {"lhs": lifted, "rhs": bound}),
        Check("pointwise_on_Y", True, pointwise_Y, {}),
        Check("pointwise_off_Y", True, pointwise_out, {"max": int(b2[outside].max())}),
    ]
    return CompressReport(N, len(Y), n, d, k, lifted, base_boundary, bound, lifted / k,
                          base_ratio, K2, lifted_family, checks)


def worked_compression(N=200, n=10, k=5):
    """Half the space carries an (N/2)-cycle; witnesses are its first k powers."""
    half = N // 2
    Y = np.arange(half)
    cyc = np.arange(N)
    cyc[Y] = (Y + 1) % half
    g = Graphing(N, [PartialInjection(Y, cyc[Y])])
    family = [compose_power(cyc, j) for j in range(k)]
    delta = Fraction(N - half, n * N)
    return compress(g, Y, family, n, delta)
