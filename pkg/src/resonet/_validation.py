"""Small input-checking helpers shared across modules."""

import math
import numbers

import numpy as np

from .exceptions import InvalidArgument


def check_scalar(value, name, *, min_val=None, max_val=None, include_min=True, include_max=True):
    """Return ``value`` as float after checking it is finite and within bounds."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidArgument(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgument(f"{name} must be finite, got {value}")
    if min_val is not None:
        if (value < min_val) if include_min else (value <= min_val):
            op = ">=" if include_min else ">"
            raise InvalidArgument(f"{name} must be {op} {min_val}, got {value}")
    if max_val is not None:
        if (value > max_val) if include_max else (value >= max_val):
            op = "<=" if include_max else "<"
            raise InvalidArgument(f"{name} must be {op} {max_val}, got {value}")
    return value


def check_int(value, name, *, min_val=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InvalidArgument(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if min_val is not None and value < min_val:
        raise InvalidArgument(f"{name} must be >= {min_val}, got {value}")
    return value


def check_site(site, n, name="site"):
    """Check a 1-based site index against a chain of length ``n``."""
    site = check_int(site, name)
    if not 1 <= site <= n:
        raise InvalidArgument(f"{name} {site} outside chain of length {n} (valid: 1..{n})")
    return site


def check_vector(x, name, *, n=None, dtype=complex):
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise InvalidArgument(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidArgument(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    return arr


def check_symmetric(h, name="matrix", rtol=0.0):
    arr = np.asarray(h, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgument(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    scale = np.max(np.abs(arr)) if arr.size else 0.0
    if np.max(np.abs(arr - arr.T), initial=0.0) > rtol * scale:
        raise InvalidArgument(f"{name} is not symmetric")
    return arr
