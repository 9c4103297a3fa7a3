"""scikit-learn style wrappers.

Each estimator takes its tuning knobs in ``__init__`` (so ``get_params`` /
``set_params`` / ``clone`` work) and stores results in trailing-underscore
attributes after ``fit``.
"""
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int
from .forests import BallSampler, FiniteGraph, GraphSampler, degree_stats, sample_degrees
from .groups import CayleyBall
from .harmonic import ChainComplex, center_trace, harmonic_projector, restriction_rank_check
from .isoperimetry import DEFAULT_NODE_BUDGET, check_comparisons, growth_rate, min_ratio_exact
from .relsim import check_main_inequality


def _check_ball(X, min_radius=1):
    if not isinstance(X, CayleyBall):
        raise TypeError(f"expected a CayleyBall, got {type(X).__name__}")
    if X.radius < min_radius:
        raise ValueError(f"ball radius must be >= {min_radius}, got {X.radius}")
    return X


class CheegerRatio(BaseEstimator):
    """Exact minimum boundary ratio over connected interior sets of a ball."""

    def __init__(self, max_size=8, node_budget=DEFAULT_NODE_BUDGET, n_jobs=1):
        self.max_size = max_size
        self.node_budget = node_budget
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        ball = _check_ball(X)
        check_positive_int(self.max_size, "max_size")
        A, ratio, count = min_ratio_exact(ball, self.max_size, self.node_budget, self.n_jobs)
        self.minimizer_ = A
        self.ratio_ = ratio
        self.n_enumerated_ = count
        self.report_ = check_comparisons(A)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "ratio_")
        return self.ratio_


class GrowthRate(BaseEstimator):
    """Growth estimate from a ball (or a list of ball sizes)."""

    def fit(self, X, y=None):
        sizes = X.ball_sizes if isinstance(X, CayleyBall) else list(X)
        g = growth_rate(sizes)
        self.estimate_ = g.estimate
        self.root_estimate_ = g.root_estimate
        self.sphere_ratios_ = g.sphere_ratios
        return self


class ForestDegree(BaseEstimator):
    """Degree of a base vertex in sampled uniform spanning forests.

    ``X`` is a :class:`CayleyBall` (free or wired boundary, base = identity)
    or a :class:`FiniteGraph` (uniform spanning tree, base = ``graph.base``
    or 0).
    """

    def __init__(self, mode="free", n_samples=1000, random_state=0, n_jobs=1):
        self.mode = mode
        self.n_samples = n_samples
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        n = check_positive_int(self.n_samples, "n_samples")
        if isinstance(X, CayleyBall):
            sampler, vertex = BallSampler(_check_ball(X), self.mode), 0
        elif isinstance(X, FiniteGraph):
            sampler, vertex = GraphSampler(X), (X.base or 0)
        else:
            raise TypeError(f"expected a CayleyBall or FiniteGraph, got {type(X).__name__}")
        degs, _ = sample_degrees(sampler, vertex, n, self.random_state, n_jobs=self.n_jobs)
        self.degrees_ = degs
        self.stats_ = degree_stats(degs)
        self.mean_degree_ = self.stats_.mean_degree
        self.cost_ = self.stats_.cost_estimate
        self.beta1_ = self.stats_.beta1_estimate
        self.ci99_ = self.stats_.ci99
        return self


class HarmonicTrace(BaseEstimator):
    """Center trace of the harmonic projector of a ball."""

    def fit(self, X, y=None):
        ball = _check_ball(X, min_radius=2)
        self.space_ = harmonic_projector(ChainComplex.from_ball(ball))
        self.dim_ = self.space_.dim
        self.center_trace_ = center_trace(self.space_)
        return self

    def restriction_ranks(self, A):
        check_is_fitted(self, "space_")
        return restriction_rank_check(self.space_, A)


class GraphingIsoperimetry(BaseEstimator):
    """Witness ratio and spanning-treeing cost of a finite graphing."""

    def fit(self, X, y):
        """``X`` is a :class:`~isolab.relsim.Graphing`, ``y`` a witness family."""
        rep = check_main_inequality(X, y)
        self.report_ = rep
        self.ratio_ = rep.witness_ratio
        self.cost_ = rep.cost
        self.treeing_cost_ = rep.cost_treeing
        return self
