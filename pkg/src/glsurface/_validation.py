"""Input checks shared by the estimators and the functional entry points."""

from __future__ import annotations

import math
import numbers

import numpy as np
from sklearn.utils.validation import check_array, check_scalar


def check_real(x, name, *, min_val=None, max_val=None, include_boundaries="both"):
    """Finite real scalar, optionally bounded; returns a float."""
    check_scalar(x, name, numbers.Real, min_val=min_val, max_val=max_val,
                 include_boundaries=include_boundaries)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


def check_positive_int(x, name, *, min_val=1):
    check_scalar(x, name, numbers.Integral, min_val=min_val)
    return int(x)


def check_parameter_vector(X, name="X"):
    """Accept a scalar, a 1D sequence or an (n, 1) column; return a 1D float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    arr = check_array(arr, ensure_2d=False, dtype=float, input_name=name)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr
