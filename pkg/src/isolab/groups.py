"""Finitely generated groups with normal forms, and finite Cayley balls.

Supported groups are free groups ``F<k>``, free abelian groups ``Z^<d>``,
finite groups ``Zmod<m>^<d>`` and binary direct products of these. Elements
are plain hashable tuples in normal form:

* free: reduced word, a tuple of nonzero ints (``i+1`` is generator ``i``,
  ``-(i+1)`` its inverse);
* free abelian / finite: exponent vector (reduced mod ``m`` when finite);
* direct product: ``(left, right)``.
"""
from __future__ import annotations

import json
import os
import string
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEFAULT_VERTEX_CAP = 2_000_000
VERTEX_CAP_ENV = "ISOLAB_VERTEX_CAP"

_LETTERS = string.ascii_lowercase


class GroupSpecError(ValueError):
    """Malformed group specification or generator word."""

    def __init__(self, message, text=None, pos=None):
        if pos is not None:
            message = f"{message} at position {pos}"
        super().__init__(message)
        self.text = text
        self.pos = pos


class ResourceError(RuntimeError):
    """A configured size or work budget was exceeded."""


def vertex_cap():
    value = os.environ.get(VERTEX_CAP_ENV)
    return int(value) if value else DEFAULT_VERTEX_CAP


@dataclass(frozen=True)
class GroupSpec:
    kind: str  # "free", "free_abelian", "finite", "product"
    rank: int = 0
    modulus: int | None = None
    left: GroupSpec | None = None
    right: GroupSpec | None = None
    generator_names: tuple = ()

    def __post_init__(self):
        if self.kind in ("free", "free_abelian", "finite") and self.rank < 1:
            raise GroupSpecError(f"rank must be >= 1, got {self.rank}")
        if self.kind == "finite" and (self.modulus is None or self.modulus < 2):
            raise GroupSpecError(f"modulus must be >= 2, got {self.modulus}")
        if len(set(self.generator_names)) != len(self.generator_names):
            raise GroupSpecError("generator names must be pairwise distinct")

    # -- structure -----------------------------------------------------------

    @property
    def n_generators(self):
        if self.kind == "product":
            return self.left.n_generators + self.right.n_generators
        return self.rank

    @property
    def order(self):
        """Group order, or None for infinite groups."""
        if self.kind == "finite":
            return self.modulus**self.rank
        if self.kind == "product":
            a, b = self.left.order, self.right.order
            return None if a is None or b is None else a * b
        return None

    def identity(self):
        if self.kind == "free":
            return ()
        if self.kind == "product":
            return (self.left.identity(), self.right.identity())
        return (0,) * self.rank

    def generator(self, i):
        """The ``i``-th standard generator (0-based, across product factors)."""
        if not 0 <= i < self.n_generators:
            raise IndexError(f"generator index {i} out of range")
        if self.kind == "free":
            return (i + 1,)
        if self.kind == "product":
            nl = self.left.n_generators
            if i < nl:
                return (self.left.generator(i), self.right.identity())
            return (self.left.identity(), self.right.generator(i - nl))
        e = [0] * self.rank
        e[i] = 1
        return tuple(e)

    # -- group law -------------------------------------------------------------

    def multiply(self, g, h):
        if self.kind == "free":
            # g and h are reduced, so cancellation only happens at the seam
            i = 0
            n = min(len(g), len(h))
            while i < n and g[len(g) - 1 - i] == -h[i]:
                i += 1
            return g[: len(g) - i] + h[i:]
        if self.kind == "free_abelian":
            return tuple(a + b for a, b in zip(g, h))
        if self.kind == "finite":
            m = self.modulus
            return tuple((a + b) % m for a, b in zip(g, h))
        return (self.left.multiply(g[0], h[0]), self.right.multiply(g[1], h[1]))

    def inverse(self, g):
        if self.kind == "free":
            return tuple(-x for x in reversed(g))
        if self.kind == "free_abelian":
            return tuple(-a for a in g)
        if self.kind == "finite":
            m = self.modulus
            return tuple((-a) % m for a in g)
        return (self.left.inverse(g[0]), self.right.inverse(g[1]))

    def normalize(self, g):
        """Normal form of an arbitrary representative."""
        if self.kind == "free":
            out = []
            for x in g:
                if x == 0 or abs(x) > self.rank:
                    raise GroupSpecError(f"invalid letter {x} for F{self.rank}")
                if out and out[-1] == -x:
                    out.pop()
                else:
                    out.append(x)
            return tuple(out)
        if self.kind == "product":
            return (self.left.normalize(g[0]), self.right.normalize(g[1]))
        if len(g) != self.rank:
            raise GroupSpecError(f"expected {self.rank} coordinates, got {len(g)}")
        if self.kind == "finite":
            return tuple(int(a) % self.modulus for a in g)
        return tuple(int(a) for a in g)

    def is_identity(self, g):
        return g == self.identity()

    # -- words and labels ----------------------------------------------------

    def word(self, text):
        """Evaluate a word over the generator names; uppercase means inverse."""
        text = text.strip()
        if not text:
            raise GroupSpecError("empty generator word", text)
        g = self.identity()
        for pos, ch in enumerate(text):
            name = ch.lower()
            if name not in self.generator_names:
                raise GroupSpecError(f"unknown generator {ch!r}", text, pos)
            s = self.generator(self.generator_names.index(name))
            g = self.multiply(g, self.inverse(s) if ch.isupper() else s)
        return g

    def label(self, g):
        """Human-readable label of an element in normal form."""
        if self.kind == "free":
            if not g:
                return "e"
            return "".join(
                self.generator_names[x - 1] if x > 0 else self.generator_names[-x - 1].upper()
                for x in g
            )
        if self.kind == "product":
            return f"({self.left.label(g[0])},{self.right.label(g[1])})"
        return "(" + ",".join(str(a) for a in g) + ")"

    def __str__(self):
        if self.kind == "free":
            return f"F{self.rank}"
        if self.kind == "free_abelian":
            return f"Z^{self.rank}"
        if self.kind == "finite":
            return f"Zmod{self.modulus}^{self.rank}"
        return f"({self.left}) x ({self.right})"


def multiply(g, h, spec):
    """Normal form of ``g*h`` in ``spec``."""
    return spec.multiply(g, h)


# -- parsing -------------------------------------------------------------------


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, msg):
        raise GroupSpecError(msg, self.text, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, s):
        self.skip_ws()
        return self.text.startswith(s, self.pos)

    def expect(self, s):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def integer(self):
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected an integer")
        return int(self.text[start:self.pos]), start

    def spec(self):
        node = self.atom()
        while self.peek("x"):
            self.pos += 1
            node = ("product", node, self.atom())
        return node

    def atom(self):
        if self.peek("("):
            self.pos += 1
            node = self.spec()
            self.expect(")")
            return node
        if self.peek("Zmod"):
            self.pos += 4
            m, at = self.integer()
            if m < 2:
                raise GroupSpecError(f"modulus must be >= 2, got {m}", self.text, at)
            d = self.exponent()
            return ("finite", d, m)
        if self.peek("F"):
            self.pos += 1
            k, at = self.integer()
            if k < 1:
                raise GroupSpecError(f"rank must be >= 1, got {k}", self.text, at)
            return ("free", k, None)
        if self.peek("Z"):
            self.pos += 1
            return ("free_abelian", self.exponent(), None)
        self.error("expected F<k>, Z^<d>, Zmod<m>^<d> or '('")

    def exponent(self):
        if not self.peek("^"):
            return 1
        self.pos += 1
        d, at = self.integer()
        if d < 1:
            raise GroupSpecError(f"rank must be >= 1, got {d}", self.text, at)
        return d


def _build(node, start):
    if node[0] == "product":
        left = _build(node[1], start)
        right = _build(node[2], start + left.n_generators)
        return GroupSpec(
            "product",
            left=left,
            right=right,
            generator_names=left.generator_names + right.generator_names,
        )
    kind, rank, modulus = node
    if start + rank > len(_LETTERS):
        raise GroupSpecError("at most 26 generators are supported")
    names = tuple(_LETTERS[start:start + rank])
    return GroupSpec(kind, rank=rank, modulus=modulus, generator_names=names)


def parse_group_spec(text):
    """Parse ``F<k> | Z^<d> | Zmod<m>^<d> | (<spec>) x (<spec>)``.

    ``Z`` and ``Zmod<m>`` abbreviate exponent 1. Generator names are assigned
    a, b, c, ... left to right across product factors.
    """
    p = _Parser(text)
    node = p.spec()
    p.skip_ws()
    if p.pos != len(text):
        p.error("unexpected trailing input")
    return _build(node, 0)


def parse_generators(spec, text=None):
    """Comma-separated words -> list of elements (default: standard generators)."""
    if text is None or not text.strip():
        return [spec.generator(i) for i in range(spec.n_generators)]
    gens = []
    for w in text.split(","):
        g = spec.word(w)
        if spec.is_identity(g):
            raise GroupSpecError(f"generator word {w.strip()!r} is the identity", text)
        gens.append(g)
    return gens


# -- Cayley balls --------------------------------------------------------------


@dataclass(eq=False)
class CayleyBall:
    """Radius-``r`` ball of the Cayley graph, vertices in BFS order.

    ``right[v, j]`` is the index of ``v * s_j`` (``-1`` outside the ball) and
    ``right_inv[v, j]`` that of ``v * s_j^-1``. Each row ``(u, v, j)`` of
    ``edges`` satisfies ``v = u * s_j``; an involutive generator contributes
    a single edge per unordered pair.
    """

    spec: GroupSpec
    generators: list
    radius: int
    vertices: list
    sphere: np.ndarray
    right: np.ndarray
    right_inv: np.ndarray
    edges: np.ndarray
    involutions: tuple
    index: dict = field(repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def interior(self):
        """Mask of vertices with all neighbours inside the ball."""
        return self.sphere <= self.radius - 1

    @cached_property
    def degree(self):
        d = np.bincount(self.edges[:, 0], minlength=self.n_vertices)
        d += np.bincount(self.edges[:, 1], minlength=self.n_vertices)
        return d

    @property
    def full_degree(self):
        """Degree in the infinite Cayley graph: 2|S| minus involutions."""
        return 2 * len(self.generators) - sum(self.involutions)

    @cached_property
    def ball_sizes(self):
        return np.cumsum(np.bincount(self.sphere, minlength=self.radius + 1)).tolist()

    @property
    def saturated(self):
        """True when the outermost sphere is empty (finite group exhausted)."""
        sizes = self.ball_sizes
        return len(sizes) >= 2 and sizes[-1] == sizes[-2]

    @cached_property
    def adjacency(self):
        """Vertex -> list of (neighbour, edge id)."""
        adj = [[] for _ in range(self.n_vertices)]
        for e, (u, v, _) in enumerate(self.edges.tolist()):
            adj[u].append((v, e))
            adj[v].append((u, e))
        return adj

    def labels(self):
        return [self.spec.label(g) for g in self.vertices]

    def to_dict(self):
        return {
            "radius": self.radius,
            "vertices": self.labels(),
            "sphere": self.sphere.tolist(),
            "edges": self.edges.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def cayley_ball(spec, generators, radius, cap=None):
    """Breadth-first ball of radius ``radius`` around the identity.

    Edges join ``g`` and ``g*s`` for every ``s`` in ``generators`` (an ordered
    multiset; parallel edges with different labels are kept).
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    cap = vertex_cap() if cap is None else cap
    gens = [spec.normalize(s) for s in generators]
    if not gens:
        raise ValueError("generating set is empty")
    for s in gens:
        if spec.is_identity(s):
            raise GroupSpecError("identity element in generating set")
    invs = [spec.inverse(s) for s in gens]
    involutions = tuple(spec.multiply(s, s) == spec.identity() for s in gens)

    e = spec.identity()
    vertices = [e]
    sphere = [0]
    index = {e: 0}
    frontier = deque([0])
    mul = spec.multiply
    k = len(gens)
    right = []
    right_inv = []
    while frontier:
        v = frontier.popleft()
        g = vertices[v]
        d = sphere[v]
        row, row_inv = [-1] * k, [-1] * k
        for j in range(k):
            for target, h in ((row, mul(g, gens[j])), (row_inv, mul(g, invs[j]))):
                w = index.get(h)
                if w is None and d < radius:
                    w = len(vertices)
                    if w >= cap:
                        raise ResourceError(
                            f"Cayley ball exceeds the vertex cap of {cap} "
                            f"(set {VERTEX_CAP_ENV} to raise it)"
                        )
                    index[h] = w
                    vertices.append(h)
                    sphere.append(d + 1)
                    frontier.append(w)
                if w is not None:
                    target[j] = w
        right.append(row)
        right_inv.append(row_inv)

    right = np.asarray(right, dtype=np.int64).reshape(len(vertices), k)
    right_inv = np.asarray(right_inv, dtype=np.int64).reshape(len(vertices), k)

    edges = []
    for j in range(k):
        for u in range(len(vertices)):
            w = right[u, j]
            if w < 0 or (involutions[j] and w < u):
                continue
            edges.append((u, w, j))
    edges.sort()
    return CayleyBall(
        spec=spec,
        generators=gens,
        radius=radius,
        vertices=vertices,
        sphere=np.asarray(sphere, dtype=np.int64),
        right=right,
        right_inv=right_inv,
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 3),
        involutions=involutions,
        index=index,
    )


def ball_sizes(spec, generators, radius, cap=None):
    """``[|B(0)|, ..., |B(radius)|]`` by breadth-first search (no edges kept)."""
    cap = vertex_cap() if cap is None else cap
    gens = [spec.normalize(s) for s in generators]
    steps = gens + [spec.inverse(s) for s in gens]
    seen = {spec.identity()}
    layer = [spec.identity()]
    sizes = [1]
    for _ in range(radius):
        nxt = []
        for g in layer:
            for s in steps:
                h = spec.multiply(g, s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        if len(seen) > cap:
            raise ResourceError(f"ball exceeds the vertex cap of {cap}")
        sizes.append(len(seen))
        layer = nxt
    return sizes
