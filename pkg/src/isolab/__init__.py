"""isolab: isoperimetric constants, spanning forests and harmonic chains.

Finite-scale computations on Cayley balls of free, free abelian and finite
abelian groups (and their products), plus an exact finite model of
measure-preserving graphings.
"""
__version__ = "0.1.0"

from .groups import (  # noqa: E402
    CayleyBall,
    GroupSpec,
    GroupSpecError,
    ResourceError,
    ball_sizes,
    cayley_ball,
    multiply,
    parse_generators,
    parse_group_spec,
)
from .isoperimetry import (  # noqa: E402
    VertexSet,
    check_comparisons,
    edge_boundary,
    growth_rate,
    inner_boundary,
    kazhdan_ratio,
    min_ratio_exact,
    ratio_profile,
    vertex_set,
)

__all__ = [
    "CayleyBall",
    "GroupSpec",
    "GroupSpecError",
    "ResourceError",
    "VertexSet",
    "ball_sizes",
    "cayley_ball",
    "check_comparisons",
    "edge_boundary",
    "growth_rate",
    "inner_boundary",
    "kazhdan_ratio",
    "min_ratio_exact",
    "multiply",
    "parse_generators",
    "parse_group_spec",
    "ratio_profile",
    "vertex_set",
]
