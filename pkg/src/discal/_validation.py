"""Small input-validation helpers used at public API boundaries."""

import numbers

import numpy as np

from .errors import ShapeError, ValidationError


def as_vector(x, n=None, name="x"):
    """Coerce to a 1-d float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ShapeError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_matrix(x, shape=None, name="x"):
    """Coerce to a 2-d float array, optionally checking its shape."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if shape is not None:
        want = tuple(s for s in shape)
        got = arr.shape
        for w, g in zip(want, got):
            if w is not None and w != g:
                raise ShapeError(f"{name} must have shape {want}, got {got}")
    return arr


def check_positive(value, name, strict=True):
    """Validate a positive (or nonnegative) scalar and return it as float."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    v = float(value)
    if not np.isfinite(v):
        raise ValidationError(f"{name} must be finite, got {v}")
    if strict and v <= 0:
        raise ValidationError(f"{name} must be > 0, got {v}")
    if not strict and v < 0:
        raise ValidationError(f"{name} must be >= 0, got {v}")
    return v


def check_fitted(obj, attr):
    if getattr(obj, attr, None) is None:
        raise ValidationError(
            f"{type(obj).__name__} is not fitted; call fit() first"
        )
