import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from isolab.forests import (
    BallSampler,
    DisconnectedGraphError,
    FiniteGraph,
    GraphSampler,
    ball_forest,
    check_rsf_inequality,
    degree_stats,
    edge_inclusion_probabilities,
    estimate_beta1,
    sample_degrees,
    torus_graph,
    wilson_ust,
)
from isolab.groups import cayley_ball, parse_generators, parse_group_spec


def grid(rows, cols):
    idx = lambda i, j: i * cols + j  # noqa: E731
    edges = [(idx(i, j), idx(i, j + 1)) for i in range(rows) for j in range(cols - 1)]
    edges += [(idx(i, j), idx(i + 1, j)) for i in range(rows - 1) for j in range(cols)]
    return FiniteGraph(rows * cols, edges)


def spanning_trees(graph):
    """All spanning trees as sorted edge-id tuples (brute force)."""
    n = graph.n_vertices
    out = []
    for sub in itertools.combinations(range(graph.n_edges), n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ok = True
        for u, v in graph.edges[list(sub)].tolist():
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if ok:
            out.append(sub)
    return out


def make_ball(text, radius):
    spec = parse_group_spec(text)
    return cayley_ball(spec, parse_generators(spec), radius)


def test_tree_counts():
    assert len(spanning_trees(torus_graph(3, 1))) == 3
    assert len(spanning_trees(grid(2, 3))) == 15
    k4 = FiniteGraph(4, list(itertools.combinations(range(4), 2)))
    assert len(spanning_trees(k4)) == 16


@pytest.mark.parametrize("graph", [grid(2, 3), FiniteGraph(3, [(0, 1), (0, 1), (1, 2), (0, 2)])],
                         ids=["grid2x3", "multigraph"])
def test_wilson_uniform(graph):
    trees = spanning_trees(graph)
    n = 20_000
    counts = Counter(tuple(wilson_ust(graph, rng=np.random.default_rng([7, i])).edges.tolist())
                     for i in range(n))
    assert set(counts) <= set(trees)
    obs = [counts.get(t, 0) for t in trees]
    assert chisquare(obs).pvalue > 1e-3


def test_kirchhoff_matches_enumeration():
    graph = grid(2, 3)
    trees = spanning_trees(graph)
    freq = np.zeros(graph.n_edges)
    for t in trees:
        freq[list(t)] += 1
    assert np.allclose(edge_inclusion_probabilities(graph), freq / len(trees))


def test_wilson_deterministic():
    g = torus_graph(4, 2)
    a = wilson_ust(g, rng_seed=5)
    b = wilson_ust(g, rng_seed=5)
    assert np.array_equal(a.edges, b.edges)
    assert a.is_acyclic() and len(a.edges) == g.n_vertices - 1


def test_disconnected():
    with pytest.raises(DisconnectedGraphError):
        wilson_ust(FiniteGraph(4, [(0, 1), (2, 3)]))


@pytest.mark.parametrize("text,radius", [("F2", 3), ("Z^2", 4), ("Zmod5^2", 3), ("F2 x Zmod2", 2)])
def test_ball_forests(text, radius):
    ball = make_ball(text, radius)
    for seed in range(20):
        free = ball_forest(ball, "free", seed)
        assert free.is_acyclic()
        assert len(free.edges) == ball.n_vertices - 1
        wired = ball_forest(ball, "wired", seed)
        assert wired.is_acyclic()
        ends = ball.edges[wired.edges, :2]
        assert ball.interior[ends].all()


def test_free_tree_ball_degree_is_full():
    ball = make_ball("F2", 4)
    degs, _ = sample_degrees(BallSampler(ball, "free"), 0, 50, 1)
    assert set(degs) == {4}


@pytest.mark.parametrize("mode", ["free", "wired"])
def test_mean_degree_matches_kirchhoff(mode):
    sampler = BallSampler(make_ball("Z^2", 4), mode)
    degs, _ = sample_degrees(sampler, 0, 4000, 11)
    st_ = degree_stats(degs)
    assert abs(st_.mean_degree - sampler.expected_degree(0)) <= 4 * st_.std_error


def test_jobs_do_not_change_samples():
    sampler = BallSampler(make_ball("Z^2", 3), "free")
    a, _ = sample_degrees(sampler, 0, 60, 3, n_jobs=1)
    b, _ = sample_degrees(sampler, 0, 60, 3, n_jobs=3)
    assert a == b


def test_degree_stats():
    x = [2, 3, 1, 2, 2, 4]
    s = degree_stats(x)
    assert s.mean_degree == pytest.approx(np.mean(x))
    assert s.variance == pytest.approx(np.var(x, ddof=1))
    assert s.ci99 == pytest.approx(2.5758293035489 * math.sqrt(np.var(x, ddof=1) / 6))
    assert s.beta1_estimate == pytest.approx(np.mean(x) / 2 - 1)


def test_estimate_beta1_free_group():
    spec = parse_group_spec("F3")
    st_ = estimate_beta1(spec, parse_generators(spec), 3, n_samples=20)
    assert st_.beta1_estimate == 2.0 and st_.variance == 0.0


@st.composite
def graph_and_subset(draw):
    n = draw(st.integers(3, 10))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=n - 1, max_size=3 * n))
    # keep it connected with a path
    edges = [(i, i + 1) for i in range(n - 1)] + chosen
    A = draw(st.sets(st.integers(0, n - 1), max_size=6))
    return FiniteGraph(n, edges), A


@settings(max_examples=80, deadline=None)
@given(gA=graph_and_subset(), seed=st.integers(0, 2**32 - 1))
def test_rsf_inequality_property(gA, seed):
    graph, A = gA
    sample = GraphSampler(graph).sample(rng_seed=seed)
    assert sample.is_acyclic()
    assert check_rsf_inequality(sample, A)
