"""Normalized Hermite functions and scaled Gauss-Hermite rules."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite


def hermite_functions(n, x):
    """Rows ``psi_0 .. psi_{n-1}`` evaluated at ``x`` (L2(R)-orthonormal).

    Uses the three-term recurrence, which is stable for the orders used here
    (no explicit polynomial coefficients are formed).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x**2)
    if n > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, n - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * x * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


@lru_cache(maxsize=32)
def scaled_gauss_hermite(order):
    """Nodes and weights for integrals of plain (unweighted) functions.

    ``sum(w * g(x))`` approximates ``int g(x) dx`` for g decaying like a
    Gaussian; the weights are ``w_k exp(x_k^2)`` computed in log space.
    """
    x, w = roots_hermite(order)
    ws = np.exp(np.log(w) + x**2)
    x.setflags(write=False)
    ws.setflags(write=False)
    return x, ws


@lru_cache(maxsize=32)
def gauss_hermite(order):
    x, w = roots_hermite(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
