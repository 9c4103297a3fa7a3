"""Small input checks shared by the estimators and the functional API."""
import numbers

import numpy as np


class InteriorityError(ValueError):
    """A vertex set touches the outermost sphere (or marked boundary)."""


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_members(members, n_vertices):
    """Sorted, de-duplicated int tuple of vertex indices."""
    idx = sorted({int(v) for v in members})
    if idx and (idx[0] < 0 or idx[-1] >= n_vertices):
        raise IndexError(f"vertex index out of range [0, {n_vertices})")
    return tuple(idx)


def check_interior(ball, members):
    bad = [v for v in members if not ball.interior[v]]
    if bad:
        raise InteriorityError(
            f"vertices {bad[:5]} lie on the outer sphere of the radius-{ball.radius} ball"
        )


def check_seed(seed):
    if seed is None:
        return None
    if isinstance(seed, (np.random.SeedSequence, np.random.Generator)):
        return seed
    return check_positive_int(seed, "seed", minimum=0)
