"""Small argument checks shared across modules."""
import math

import numpy as np


def is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def check_positive(name, value, exc=ValueError):
    if not (math.isfinite(value) and value > 0):
        raise exc(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def check_nonnegative(name, value, exc=ValueError):
    if not (math.isfinite(value) and value >= 0):
        raise exc(f"{name} must be non-negative and finite, got {value!r}")
    return float(value)


def check_finite_array(name, values, exc=ValueError):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise exc(f"{name} contains non-finite entries")
    return arr
