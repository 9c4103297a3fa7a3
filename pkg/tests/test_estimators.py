from fractions import Fraction

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from isolab.estimators import (
    CheegerRatio,
    ForestDegree,
    GraphingIsoperimetry,
    GrowthRate,
    HarmonicTrace,
)
from isolab.forests import torus_graph
from isolab.groups import cayley_ball, parse_generators, parse_group_spec
from isolab.isoperimetry import sphere_set
from isolab.relsim import Graphing, PartialInjection, cycle_permutation, power_family


def make_ball(text, radius):
    spec = parse_group_spec(text)
    return cayley_ball(spec, parse_generators(spec), radius)


def test_params_roundtrip():
    est = CheegerRatio(max_size=5, n_jobs=2)
    assert est.get_params()["max_size"] == 5
    est2 = clone(est).set_params(max_size=3)
    assert est2.max_size == 3 and est.max_size == 5


def test_cheeger():
    est = CheegerRatio(max_size=5).fit(make_ball("F2", 3))
    assert est.ratio_ == Fraction(12, 5)
    assert est.predict() == est.ratio_
    assert est.report_.ok
    with pytest.raises(NotFittedError):
        CheegerRatio().predict()


def test_cheeger_validation():
    with pytest.raises(TypeError):
        CheegerRatio().fit([1, 2, 3])
    with pytest.raises(ValueError):
        CheegerRatio(max_size=0).fit(make_ball("F2", 2))


def test_growth():
    est = GrowthRate().fit(make_ball("F2", 6))
    assert est.estimate_ == 3.0
    assert GrowthRate().fit([1, 3, 5, 7]).estimate_ == 1.0


def test_forest_degree():
    est = ForestDegree(n_samples=30, random_state=4).fit(make_ball("F2", 3))
    assert est.beta1_ == 1.0 and est.stats_.variance == 0.0
    g = ForestDegree(n_samples=500, random_state=1).fit(torus_graph(4, 2))
    se = g.stats_.std_error
    assert abs(g.mean_degree_ - 2 * 15 / 16) <= 4 * se
    again = ForestDegree(n_samples=30, random_state=4).fit(make_ball("Z^2", 3))
    assert again.degrees_ == ForestDegree(n_samples=30, random_state=4).fit(make_ball("Z^2", 3)).degrees_


def test_harmonic_trace():
    ball = make_ball("Z", 6)
    est = HarmonicTrace().fit(ball)
    assert est.center_trace_ == pytest.approx(1 / 12, abs=1e-12)
    assert est.restriction_ranks(sphere_set(ball, 3)).equal


def test_graphing():
    phi = cycle_permutation(50)
    g = Graphing(50, [PartialInjection.from_permutation(phi)])
    est = GraphingIsoperimetry().fit(g, power_family(phi, range(5)))
    assert est.ratio_ == Fraction(2, 5)
    assert est.treeing_cost_ == Fraction(49, 50)
    assert est.report_.ok
    assert est.cost_ == 1
