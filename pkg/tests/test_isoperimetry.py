import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isolab._validation import InteriorityError
from isolab.groups import ResourceError, cayley_ball, multiply, parse_generators, parse_group_spec
from isolab.isoperimetry import (
    check_comparisons,
    edge_boundary,
    enumerate_connected,
    growth_rate,
    inner_boundary,
    kazhdan_ratio,
    min_ratio_exact,
    ratio_profile,
    sphere_set,
    translation_defects,
    vertex_set,
)


def make_ball(text, radius, gens=None):
    spec = parse_group_spec(text)
    return cayley_ball(spec, parse_generators(spec, gens), radius)


def is_connected(ball, members):
    members = set(members)
    adj = ball.adjacency
    start = next(iter(members))
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for v, _ in adj[u]:
            if v in members and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == members


def naive_boundary(ball, members):
    m = set(members)
    return sum((u in m) != (v in m) for u, v, _ in ball.edges.tolist())


BALLS = [("F2", 2, None), ("Z^2", 3, None), ("F2 x Zmod2", 2, None), ("Zmod3^2", 2, None),
         ("F2", 3, "a,ab")]


@pytest.mark.parametrize("text,radius,gens", BALLS)
def test_esu_matches_brute_force(text, radius, gens):
    ball = make_ball(text, radius, gens)
    interior = np.flatnonzero(ball.interior).tolist()
    k = 4
    expected = {}
    for size in range(1, k + 1):
        for sub in itertools.combinations(interior, size):
            if is_connected(ball, sub):
                expected[sub] = naive_boundary(ball, sub)
    seen = {}

    def visit(members, bnd):
        key = tuple(sorted(members))
        assert key not in seen, "set enumerated twice"
        seen[key] = bnd

    count = enumerate_connected(ball, k, visit)
    assert count == len(expected)
    assert seen == expected


@pytest.mark.parametrize("text,radius,gens", BALLS)
def test_min_ratio_matches_all_subsets(text, radius, gens):
    ball = make_ball(text, radius, gens)
    interior = np.flatnonzero(ball.interior).tolist()
    k = min(4, len(interior))
    best = min(
        Fraction(naive_boundary(ball, sub), size)
        for size in range(1, k + 1)
        for sub in itertools.combinations(interior, size)
    )
    _, ratio, _ = min_ratio_exact(ball, k)
    assert ratio == best


def test_known_minima():
    ball = make_ball("F2", 3)
    A, ratio, _ = min_ratio_exact(ball, 5)
    assert ratio == Fraction(12, 5)
    assert sorted(ball.labels()[v] for v in A.members) == sorted(["e", "a", "A", "b", "B"])
    assert min_ratio_exact(ball, 1)[1] == 4
    assert min_ratio_exact(make_ball("Z", 4), 5)[1] == Fraction(2, 5)


def test_parallel_jobs_agree():
    ball = make_ball("Z^2", 4)
    a = min_ratio_exact(ball, 6, n_jobs=1)
    b = min_ratio_exact(ball, 6, n_jobs=3)
    assert a[0].members == b[0].members and a[1:] == b[1:]


def test_node_budget():
    with pytest.raises(ResourceError):
        min_ratio_exact(make_ball("F2", 4), 8, node_budget=100)


def test_unit_ball_values():
    A = sphere_set(make_ball("F2", 2), 1)
    assert edge_boundary(A) == 12
    assert inner_boundary(A) == 4
    assert kazhdan_ratio(A) ** 2 == pytest.approx(6 / 5, abs=1e-15)


def test_outer_sphere_rejected():
    ball = make_ball("F2", 2)
    outer = int(np.flatnonzero(~ball.interior)[0])
    with pytest.raises(InteriorityError):
        vertex_set(ball, [0, outer])


def test_free_profile():
    rows = ratio_profile(parse_group_spec("F2"), parse_generators(parse_group_spec("F2")), 3)
    assert [r.ratio for r in rows] == [Fraction(12, 5), Fraction(36, 17), Fraction(108, 53)]


def test_growth_rate():
    g = growth_rate([1, 5, 17, 53, 161])
    assert g.estimate == 3.0
    assert g.sphere_ratios == [4.0, 3.0, 3.0, 3.0]
    assert g.root_estimate == pytest.approx(161 ** 0.25)
    assert growth_rate([1, 5, 9, 9]).estimate == 1.0
    with pytest.raises(ValueError):
        growth_rate([1])


@pytest.mark.parametrize("text", ["F2", "Z^2", "Zmod5^2", "F2 x Zmod3", "Z"])
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_random_set_invariants(text, data):
    ball = make_ball(text, 3)
    interior = np.flatnonzero(ball.interior).tolist()
    members = data.draw(st.sets(st.sampled_from(interior), min_size=1, max_size=len(interior)))
    A = vertex_set(ball, members)
    eb = edge_boundary(A)
    assert eb == naive_boundary(ball, members)
    # boundary = sum of degrees minus twice the internal edges
    internal = sum(u in A.members and v in A.members for u, v, _ in ball.edges.tolist())
    assert eb == int(ball.degree[list(A.members)].sum()) - 2 * internal
    assert inner_boundary(A) <= len(A)
    # translation defects from the group law
    spec, G = ball.spec, ball.generators
    verts = {ball.vertices[v] for v in A.members}
    for s, d in zip(G, translation_defects(A)):
        shifted = {multiply(g, s, spec) for g in verts}
        assert d == len(verts ^ shifted)
    rep = check_comparisons(A)
    assert rep.ok
    assert rep.kazhdan_value <= math.sqrt(rep.ratio) + 1e-12
