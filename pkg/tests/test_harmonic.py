import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isolab._validation import InteriorityError
from isolab.forests import FiniteGraph
from isolab.groups import cayley_ball, parse_generators, parse_group_spec
from isolab.harmonic import (
    ChainComplex,
    center_trace,
    cg_inequality_report,
    harmonic_basis_dense,
    harmonic_projector,
    inner_cycle_space,
    known_beta1,
    relative_cycle_space,
    restriction_rank_check,
)
from isolab.isoperimetry import sphere_set, vertex_set


def make_ball(text, radius, gens=None):
    spec = parse_group_spec(text)
    return cayley_ball(spec, parse_generators(spec, gens), radius)


def dense_projector(cc):
    B = harmonic_basis_dense(cc)
    return B @ B.T


CASES = [("Z", 5, None), ("Z^2", 3, None), ("F2", 3, None), ("F2", 2, "a,b,ab"),
         ("Zmod4^2", 3, None), ("F2 x Zmod2", 2, None), ("Zmod2^2", 2, None)]


@pytest.mark.parametrize("text,radius,gens", CASES)
def test_laplacian_route_matches_dense(text, radius, gens):
    cc = ChainComplex.from_ball(make_ball(text, radius, gens))
    P = dense_projector(cc)
    h = harmonic_projector(cc)
    assert h.dim == round(np.trace(P))
    Q = h.columns(np.arange(cc.n_edges))
    assert np.allclose(Q, P, atol=1e-9)


@pytest.mark.parametrize("text,radius,gens", CASES)
def test_projector_invariants(text, radius, gens):
    cc = ChainComplex.from_ball(make_ball(text, radius, gens))
    h = harmonic_projector(cc)
    P = h.columns(np.arange(cc.n_edges))
    assert np.allclose(P, P.T, atol=1e-9)
    assert np.allclose(P @ P, P, atol=1e-9)
    assert np.trace(P) == pytest.approx(h.dim, abs=1e-8)
    # image: zero flux at interior vertices, orthogonal to interior cycles
    D = cc.boundary_matrix[cc.interior_index].toarray()
    assert np.allclose(D @ P, 0, atol=1e-9)
    Z = inner_cycle_space(cc, dense=True).basis
    assert np.allclose(Z.T @ P, 0, atol=1e-9)


@pytest.mark.parametrize("text,radius,gens", CASES)
def test_dims_combinatorial(text, radius, gens):
    cc = ChainComplex.from_ball(make_ball(text, radius, gens))
    K = relative_cycle_space(cc, dense=True)
    Z = inner_cycle_space(cc, dense=True)
    D = cc.boundary_matrix[cc.interior_index].toarray()
    assert K.dim == cc.n_edges - np.linalg.matrix_rank(D)
    assert K.basis.shape[1] == K.dim and Z.basis.shape[1] == Z.dim


@pytest.mark.parametrize("r", [2, 3, 7, 20])
def test_line_trace(r):
    h = harmonic_projector(ChainComplex.from_ball(make_ball("Z", r)))
    assert center_trace(h) == pytest.approx(1 / (2 * r), abs=1e-12)


def test_free_trace_values():
    traces = [center_trace(harmonic_projector(ChainComplex.from_ball(make_ball("F2", r))))
              for r in (2, 3, 4)]
    assert traces == pytest.approx([1.125, 27 / 26, 1.0125], abs=1e-10)
    assert traces[0] > traces[1] > traces[2] > 1


def test_from_graph_cycle():
    # all-interior cycle: the harmonic space is empty
    cc = ChainComplex.from_graph(FiniteGraph(5, [(i, (i + 1) % 5) for i in range(5)]))
    assert harmonic_projector(cc).dim == 0


def test_trace_needs_radius_two():
    with pytest.raises(ValueError):
        center_trace(harmonic_projector(ChainComplex.from_ball(make_ball("Z^2", 1))))


def test_admissibility():
    ball = make_ball("Z^2", 4)
    h = harmonic_projector(ChainComplex.from_ball(ball))
    with pytest.raises(InteriorityError):
        restriction_rank_check(h, sphere_set(ball, 3))
    assert restriction_rank_check(h, sphere_set(ball, 2)).equal


@pytest.mark.parametrize("text", ["Z", "Z^2", "F2"])
@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_restriction_rank_random(text, data):
    radius = {"Z": 8, "Z^2": 5, "F2": 4}[text]
    ball = make_ball(text, radius)
    h = harmonic_projector(ChainComplex.from_ball(ball))
    pool = np.flatnonzero(ball.sphere <= radius - 2).tolist()
    members = data.draw(st.sets(st.sampled_from(pool), min_size=1, max_size=len(pool)))
    A = vertex_set(ball, members)
    rc = restriction_rank_check(h, A)
    assert rc.equal
    rep = cg_inequality_report(h, A)
    assert rep.ok
    assert rep.rank_AS <= rep.edge_boundary


def test_known_beta1():
    p = parse_group_spec
    assert known_beta1(p("F3")) == 2
    assert known_beta1(p("Z^2")) == 0
    assert known_beta1(p("Zmod5^2")) == 0
    assert known_beta1(p("F2 x Zmod2")) == 0.5
    assert known_beta1(p("F2 x Z")) == 0
