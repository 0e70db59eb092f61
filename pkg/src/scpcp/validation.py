"""Input validation helpers shared across the package."""

import numbers

import numpy as np


def as_square_matrix(x, name="X"):
    """Coerce to a dense float64 square matrix, rejecting anything else."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_same_shape(a, b, name_a="A", name_b="B"):
    if a.shape != b.shape:
        raise ValueError(f"{name_a} shape {a.shape} != {name_b} shape {b.shape}")


def check_scalar(value, name, *, minimum=None, maximum=None,
                 exclusive_min=False, exclusive_max=False):
    """Validate a real scalar against open/closed interval bounds."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ValueError(f"{name} must be a real scalar, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if minimum is not None:
        if exclusive_min and value <= minimum:
            raise ValueError(f"{name} must be > {minimum}, got {value}")
        if not exclusive_min and value < minimum:
            raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None:
        if exclusive_max and value >= maximum:
            raise ValueError(f"{name} must be < {maximum}, got {value}")
        if not exclusive_max and value > maximum:
            raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_count(value, name, *, minimum=0):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_seed(value, name="seed"):
    """Seeds are 64-bit values; negative inputs are rejected."""
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0 or value >= 2**64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit value, got {value}")
    return value


class ConvergenceError(RuntimeError):
    """An iterative kernel (CG, power iteration) failed to converge."""


class ConstructionError(RuntimeError):
    """A constructed matrix failed its post-hoc constraint verification."""
