"""Small input-checking helpers shared by the estimators and free functions."""

import numbers

import numpy as np

from .exceptions import ShapeError


def check_matrix(X, name="X", dtype=np.float64, allow_complex=False):
    """Return ``X`` as a finite 2-D C-contiguous array.

    Complex input is accepted only when ``allow_complex`` is set, in which case
    the result keeps its complex dtype.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        raise ShapeError(f"{name} must be 2-D, got a 1-D array of length {X.shape[0]}")
    if X.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={X.ndim}")
    if np.iscomplexobj(X):
        if not allow_complex:
            raise TypeError(f"{name} must be real-valued")
        X = np.ascontiguousarray(X, dtype=np.complex128)
    else:
        X = np.ascontiguousarray(X, dtype=dtype)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return X


def check_vector(y, name="y", allow_complex=False, length=None):
    y = np.asarray(y)
    if y.ndim == 2 and 1 in y.shape:
        y = y.reshape(-1)
    if y.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {y.shape}")
    if np.iscomplexobj(y):
        if not allow_complex:
            raise TypeError(f"{name} must be real-valued")
        y = y.astype(np.complex128)
    else:
        y = y.astype(np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    if length is not None and y.shape[0] != length:
        raise ShapeError(f"{name} has length {y.shape[0]}, expected {length}")
    return y


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_seed(seed):
    """Validate a 64-bit unsigned seed."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return int(seed)
