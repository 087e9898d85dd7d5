"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import math
import numbers

import numpy as np

from .exceptions import ConfigError, IngestError


def require_finite_real(name, value):
    """Return ``value`` as a float, raising ConfigError if not finite real."""
    if isinstance(value, complex):
        raise ConfigError(f"{name} must be real, got complex {value!r}")
    if not isinstance(value, numbers.Real):
        raise ConfigError(f"{name} must be a real number, got {type(value).__name__}")
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError(f"{name} must be finite, got {x!r}")
    return x


def require_finite_complex(name, value):
    """Return ``value`` as a complex number with finite parts."""
    if not isinstance(value, numbers.Complex):
        raise ConfigError(f"{name} must be a number, got {type(value).__name__}")
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(f"{name} must be finite, got {z!r}")
    return z


def require_in_unit_interval(name, value, *, open_left=False):
    x = require_finite_real(name, value)
    if open_left:
        if not 0.0 < x <= 1.0:
            raise ConfigError(f"{name} must lie in (0, 1], got {x}")
    elif not 0.0 <= x <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {x}")
    return x


def require_positive_int(name, value):
    if not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {type(value).__name__}")
    n = int(value)
    if n <= 0:
        raise ConfigError(f"{name} must be positive, got {n}")
    return n


def as_record_array(samples):
    """Coerce quadrature records to a finite (n, 2) float array.

    Accepts anything ``np.asarray`` can turn into an (n, 2) array: the
    output of ``sampler.draw``, a list of (p1, p2) pairs, etc.  Raises
    IngestError on wrong shape or non-finite entries.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise IngestError(f"expected records of shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
        raise IngestError(f"non-finite quadrature value in record {bad}")
    return arr
