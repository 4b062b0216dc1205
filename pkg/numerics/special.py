"""
Special functions evaluated in log space.
"""

import numpy as np
from scipy.special import gammaln


def log_binomial(n, k):
    """
    Logarithm of the binomial coefficient C(n, k).

    Impossible arguments (k < 0, k > n, n < 0) give -inf, so the coefficient
    itself is exactly 0 after exponentiation.

    Args:
        n: Upper index (scalar or array)
        k: Lower index (scalar or array)

    Returns:
        log C(n, k) with the same broadcast shape as the inputs
    """
    n_arr = np.asarray(n, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    n_arr, k_arr = np.broadcast_arrays(n_arr, k_arr)
    valid = (k_arr >= 0) & (n_arr >= 0) & (k_arr <= n_arr)

    out = np.full(n_arr.shape, -np.inf)
    nv = n_arr[valid]
    kv = k_arr[valid]
    out[valid] = gammaln(nv + 1.0) - gammaln(kv + 1.0) - gammaln(nv - kv + 1.0)

    if out.ndim == 0:
        return float(out)
    return out


def positive_part(x):
    """Elementwise max(x, 0)."""
    return np.maximum(x, 0.0)
