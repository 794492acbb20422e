"""Input validation helpers shared across the package."""

from __future__ import annotations

import math
import numbers

import numpy as np


def check_scalar(value, name, lo=-math.inf, hi=math.inf, *, low_open=False,
                 high_open=False, integral=False):
    """Validate a numeric scalar against an interval and return it.

    Raises TypeError for non-numeric input and ValueError for out-of-range
    or non-finite values.
    """
    if integral:
        if not isinstance(value, numbers.Integral):
            raise TypeError(f"{name} must be an integer, got {value!r}")
        value = int(value)
    else:
        if not isinstance(value, numbers.Real):
            raise TypeError(f"{name} must be a real number, got {value!r}")
        value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    below = value <= lo if low_open else value < lo
    above = value >= hi if high_open else value > hi
    if below or above:
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        raise ValueError(f"{name} must lie in {lb}{lo}, {hi}{rb}, got {value!r}")
    return value


def as_observation(values, dim=None, name="observation"):
    """Coerce to a finite 1-d float vector, optionally of fixed dimension."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} must have dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} components must all be finite")
    return arr
