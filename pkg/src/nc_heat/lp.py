"""Generalized singular values and L^p norms weighted by the calibrated trace."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import ModelConfig, adjoint
from .errors import ExponentMismatch, InvalidExponent


@dataclass(frozen=True)
class SingularProfile:
    """Step function ``mu(t) = values[k]`` on ``[k w, (k+1) w)``, zero afterwards."""

    values: np.ndarray
    weight: float

    def mu(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t / self.weight).astype(int)
        padded = np.append(self.values, 0.0)
        return padded[np.clip(k, 0, self.values.size)]

    def distribution(self, s):
        """``n(s) = weight * #{k : values[k] > s}``."""
        s = np.asarray(s, dtype=float)
        # values are sorted descending; count entries strictly above s
        asc = self.values[::-1]
        return self.weight * (asc.size - np.searchsorted(asc, s, side="right"))


def singular_values(x: np.ndarray) -> np.ndarray:
    """Descending singular values (direct SVD; forming ``x* x`` would square the range)."""
    return np.linalg.svd(np.asarray(x), compute_uv=False)


def singular_profile(cfg: ModelConfig, x: np.ndarray) -> SingularProfile:
    return SingularProfile(values=singular_values(x), weight=cfg.tau_constant)


def _norm_from_values(vals: np.ndarray, p: float, weight: float) -> float:
    if p == math.inf:
        return float(vals[0]) if vals.size else 0.0
    if p < 1:
        raise InvalidExponent(f"p must be >= 1, got {p}")
    top = vals[0] if vals.size else 0.0
    if top == 0.0:
        return 0.0
    # scale out the largest value to avoid overflow for big p
    return float(top * (weight * np.sum((vals / top) ** p)) ** (1.0 / p))


def lp_norm(cfg: ModelConfig, x: np.ndarray, p: float) -> float:
    """``(c_tau * sum s_k^p)^(1/p)``, or the largest singular value for ``p = inf``.

    Raises
    ------
    InvalidExponent
        If ``p < 1``.
    """
    if p != math.inf and p < 1:
        raise InvalidExponent(f"p must be >= 1, got {p}")
    return _norm_from_values(singular_values(x), p, cfg.tau_constant)


def lp_norm_positive(cfg: ModelConfig, x: np.ndarray, p: float) -> float:
    """Same as :func:`lp_norm` for Hermitian ``x`` using its eigenvalues directly."""
    if p != math.inf and p < 1:
        raise InvalidExponent(f"p must be >= 1, got {p}")
    x = np.asarray(x)
    if x.ndim == 1:
        ev = np.abs(np.real(x))
    else:
        ev = np.abs(np.linalg.eigvalsh(0.5 * (x + adjoint(x))))
    return _norm_from_values(np.sort(ev)[::-1], p, cfg.tau_constant)


def holder_defect(cfg: ModelConfig, x: np.ndarray, y: np.ndarray, p: float, q: float,
                  r: float) -> float:
    """``||x y||_r - ||x||_p ||y||_q``; never significantly positive.

    Raises
    ------
    ExponentMismatch
        If ``1/r != 1/p + 1/q``.
    """
    inv = lambda e: 0.0 if e == math.inf else 1.0 / e
    if abs(inv(r) - inv(p) - inv(q)) > 1e-12:
        raise ExponentMismatch(f"1/{r} != 1/{p} + 1/{q}")
    return lp_norm(cfg, x @ y, r) - lp_norm(cfg, x, p) * lp_norm(cfg, y, q)
