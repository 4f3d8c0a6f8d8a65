"""Gaussians, the Gaussian operator and the heat semigroup on the matrix model.

Two independent routes realize ``exp(-t Delta)``:

* ``quadrature``: a Gaussian-weighted average of Weyl conjugations
  (convolution with the classical heat kernel), with tensor Gauss-Hermite
  nodes and padded Weyl matrices;
* ``generator``: exact exponentiation of the double-commutator generator
  ``(ad_Q^2 + ad_P^2) / h`` on a finite Hermite space.  That generator keeps
  every diagonal ``u[n + k, n]`` within its own offset ``k`` and acts there as
  a real symmetric tridiagonal matrix, so each band is exponentiated from a
  cached eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvals_banded

from ._hermite import gauss_hermite, hermite_functions, scaled_gauss_hermite
from .algebra import (
    ModelConfig,
    adjoint,
    annihilation,
    embed,
    inner_translation_vector,
    lambda_theta,
    ladder_matrices,
    outside_mass,
    weyl_operator,
)
from .errors import GridTooShort, LeakageExceeded, QuadratureUnderresolved


# --- classical Gaussian ---------------------------------------------------

@dataclass(frozen=True)
class GaussianSpec:
    """Heat kernel ``G_t(x) = (4 pi t)^(-d/2) exp(-|x|^2 / 4t)`` on R^d."""

    t: float
    d: int = 2

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")

    @property
    def peak(self) -> float:
        return (4.0 * math.pi * self.t) ** (-self.d / 2.0)

    def __call__(self, *coords):
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
        return self.peak * np.exp(-r2 / (4.0 * self.t))

    def symbol(self, *freqs):
        """Fourier transform ``exp(-t |xi|^2)``."""
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in freqs)
        return np.exp(-self.t * r2)


# --- Gaussian operator ----------------------------------------------------

def gaussian_operator(cfg: ModelConfig, t: float, dim: Optional[int] = None,
                      rtol: float = 1e-10, max_order: int = 768) -> np.ndarray:
    """``(2 pi)^-2 lambda(exp(-t |xi|^2))`` on the working block by quadrature.

    The Legendre order is doubled until two successive results agree to
    ``rtol``.

    Raises
    ------
    QuadratureUnderresolved
        If no agreement is reached by ``max_order``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    spec = GaussianSpec(t)
    radius = math.sqrt(40.0 / t)

    def symbol(a, b):
        return spec.symbol(a, b) / (2.0 * math.pi) ** 2

    order = 96
    prev = lambda_theta(cfg, symbol, radius, order=order, dim=dim)
    while order < max_order:
        order *= 2
        cur = lambda_theta(cfg, symbol, radius, order=order, dim=dim)
        if np.abs(cur - prev).max() <= rtol * np.abs(cur).max():
            return 0.5 * (cur + adjoint(cur))
        prev = cur
    raise QuadratureUnderresolved(f"Gaussian operator at t={t} did not converge by order {max_order}")


def gaussian_operator_diagonal(t: float, dim: int, h: float = 1.0) -> np.ndarray:
    """Closed-form eigenvalues of the Gaussian operator in the Hermite basis.

    ``(1 / (2 pi h)) r^n / (m + 1/2)`` with ``m = 2t/h`` and
    ``r = (m - 1/2) / (m + 1/2)``; it is a thermal state of the oscillator,
    positive only for ``t >= h/4``.
    """
    m = 2.0 * t / h
    r = (m - 0.5) / (m + 0.5)
    vals = r ** np.arange(dim)
    return vals / (m + 0.5) / (2.0 * math.pi * h)


def gaussian_operator_exact(t: float, dim: int, h: float = 1.0) -> np.ndarray:
    return np.diag(gaussian_operator_diagonal(t, dim, h)).astype(complex)


def sigma_matrix(t: float) -> np.ndarray:
    """Quadratic-form matrix of the position-space kernel of the Gaussian operator (h = 1)."""
    a = t + 1.0 / (16.0 * t)
    b = -t + 1.0 / (16.0 * t)
    return np.array([[a, b], [b, a]])


def gaussian_kernel_form(t: float, f: np.ndarray, g: np.ndarray, x: np.ndarray,
                         weights: np.ndarray, h: float = 1.0) -> complex:
    """``<f, G g>`` from the explicit position kernel, by tensor quadrature.

    ``f`` and ``g`` are sampled at nodes ``x`` with quadrature ``weights``.
    For ``h != 1`` the operator equals ``(1/h)`` times the ``h = 1`` operator
    at time ``t/h``.
    """
    s = t / h
    sig = sigma_matrix(s)
    X, Y = np.meshgrid(x, x, indexing="ij")
    quad = sig[0, 0] * X**2 + 2 * sig[0, 1] * X * Y + sig[1, 1] * Y**2
    kern = np.exp(-quad) / (2.0 * math.pi) / math.sqrt(4.0 * math.pi * s) / h
    return complex(np.conj(f * weights) @ kern @ (g * weights))


# --- quadrature heat channel ----------------------------------------------

@dataclass
class HeatChannel:
    """Gaussian average of Weyl conjugations ``u -> sum_k w_k W_k u W_k*``."""

    t: float
    weights: np.ndarray
    zetas: np.ndarray
    weyls: np.ndarray = field(repr=False)
    n_work: int = 0

    def apply_padded(self, u_pad: np.ndarray) -> np.ndarray:
        tmp = np.matmul(self.weyls, u_pad)
        tmp = np.matmul(tmp, np.conj(np.swapaxes(self.weyls, 1, 2)))
        return np.tensordot(self.weights, tmp, axes=1)

    def kraus_operators(self) -> np.ndarray:
        """Working-block Kraus family ``sqrt(w_k) W_k[:N, :N]`` (sub-unital)."""
        n = self.n_work
        return np.sqrt(self.weights)[:, None, None] * self.weyls[:, :n, :n]

    def unitality_defect(self) -> float:
        n = self.n_work
        img = np.einsum("k,kij,klj->il", self.weights, self.weyls, np.conj(self.weyls))
        return float(np.abs(img[:n, :n] - np.eye(n)).max())


def _heat_nodes(t: float, order: int, prune: float = 1e-18):
    x, w = gauss_hermite(order)
    eta1, eta2 = np.meshgrid(2.0 * math.sqrt(t) * x, 2.0 * math.sqrt(t) * x, indexing="ij")
    wts = np.outer(w, w) / math.pi
    keep = wts > prune * wts.max()
    wts = wts[keep]
    nodes = np.stack([eta1[keep], eta2[keep]], axis=1)
    return wts / wts.sum(), nodes


@lru_cache(maxsize=16)
def heat_channel(cfg: ModelConfig, t: float) -> HeatChannel:
    """Build (and cache) the quadrature channel for a single step ``t``."""
    if not t > 0:
        raise ValueError("t must be positive")
    wts, etas = _heat_nodes(t, cfg.quad_order)
    # convolution uses T_{-eta}
    zetas = np.array([inner_translation_vector(cfg, -eta) for eta in etas])
    weyls = np.array([weyl_operator(cfg, z, check=False) for z in zetas])
    return HeatChannel(t=t, weights=wts, zetas=zetas, weyls=weyls, n_work=cfg.N)


# --- generator route ------------------------------------------------------

def band_tridiagonal(dim: int, h: float, k: int):
    """Diagonal and off-diagonal of the generator on band offset ``|k|``."""
    k = abs(k)
    j = np.arange(dim, dtype=float)
    D = 2.0 * j + 1.0
    D[-1] = dim - 1.0              # truncated a a^dagger
    n = np.arange(dim - k)
    diag = (D[n + k] + D[n]) / h
    off = -2.0 * np.sqrt((n[:-1] + k + 1.0) * (n[:-1] + 1.0)) / h
    return diag, off


class HeatGenerator:
    """Exact ``exp(-t L)`` for the truncated double-commutator generator on ``dim`` modes."""

    def __init__(self, dim: int, h: float = 1.0, cache: bool = True):
        self.dim = dim
        self.h = h
        self._cache = {} if cache else None

    def band(self, k: int):
        k = abs(k)
        if self._cache is not None and k in self._cache:
            return self._cache[k]
        diag, off = band_tridiagonal(self.dim, self.h, k)
        if diag.size == 1:
            out = (diag, np.ones((1, 1)))
        else:
            out = eigh_tridiagonal(diag, off)
        if self._cache is not None:
            self._cache[k] = out
        return out

    def apply_band(self, k: int, vec: np.ndarray, t: float) -> np.ndarray:
        lam, vecs = self.band(k)
        return vecs @ (np.exp(-t * lam) * (vecs.T @ vec))

    def apply(self, u: np.ndarray, t: float, bandwidth: Optional[int] = None) -> np.ndarray:
        """Apply to a ``dim x dim`` matrix whose bands beyond ``bandwidth`` vanish."""
        u = np.asarray(u)
        if u.ndim == 1:
            return self.apply_band(0, u, t)
        n = self.dim
        kmax = n - 1 if bandwidth is None else min(bandwidth, n - 1)
        out = np.zeros((n, n), dtype=complex)
        idx = np.arange(n)
        for k in range(-kmax, kmax + 1):
            rows = idx[max(k, 0):n + min(k, 0)]
            cols = rows - k
            vec = u[rows, cols]
            if not np.any(vec):
                continue
            out[rows, cols] = self.apply_band(k, vec, t)
        return out

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """Generator itself (no exponential); used for consistency checks."""
        a = annihilation(self.dim)
        D = a @ a.T + a.T @ a
        return (D @ u + u @ D - 2.0 * (a @ u @ a.T + a.T @ u @ a)) / self.h


@lru_cache(maxsize=8)
def heat_generator(dim: int, h: float) -> HeatGenerator:
    return HeatGenerator(dim, h)


# --- public heat semigroup ------------------------------------------------

def heat_apply(cfg: ModelConfig, t: float, u: np.ndarray, method: str = "quadrature",
               step: float = 1.0, check: bool = True, return_padded: bool = False):
    """``exp(-t Delta) u`` for a working-block operator ``u``.

    ``method='quadrature'`` composes channel steps of length at most
    ``step``; ``method='generator'`` exponentiates the double commutator on
    the padded space.  Each step's output is measured for mass outside the
    working block and projected back.

    Raises
    ------
    LeakageExceeded
        If ``check`` and some step leaks more than ``cfg.tol_leak``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    u = np.asarray(u)
    n = u.shape[0]
    if n != cfg.N:
        raise ValueError(f"operator must be {cfg.N}x{cfg.N}, got {u.shape}")
    if method == "generator":
        gen = heat_generator(cfg.N_pad, cfg.h)
        y = gen.apply(embed(u, cfg.N_pad), t, bandwidth=n - 1)
        leak = outside_mass(y, n)
        if check and leak > cfg.tol_leak:
            raise LeakageExceeded(f"heat step leaked {leak:.2e}", leak)
        return y if return_padded else y[:n, :n]
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    n_steps = max(1, int(math.ceil(t / step - 1e-12)))
    dt = t / n_steps
    chan = heat_channel(cfg, dt)
    x = u
    for _ in range(n_steps):
        y = chan.apply_padded(embed(x, cfg.N_pad))
        leak = outside_mass(y, n)
        if check and leak > cfg.tol_leak:
            raise LeakageExceeded(f"heat step leaked {leak:.2e}", leak)
        x = y[:n, :n]
    return y if return_padded else x


def laplacian_apply(cfg: ModelConfig, u: np.ndarray) -> np.ndarray:
    """Double-commutator Laplacian ``([Q,[Q,u]] + [P,[P,u]]) / h``."""
    u = np.asarray(u)
    n = u.shape[0]
    lad = ladder_matrices(cfg)
    Q = lad["Q"]
    P = -1j * lad["Dq"]
    x = embed(u, cfg.N_pad)

    def ad(a, y):
        return a @ y - y @ a

    out = (ad(Q, ad(Q, x)) + ad(P, ad(P, x))) / cfg.h
    return out[:n, :n] if n < cfg.N_pad else out


def derivation(cfg: ModelConfig, j: int, u: np.ndarray) -> np.ndarray:
    """Partial derivative ``d_j u = (i / sqrt(h)) [X_j, u]`` with ``X = (Q, P)``.

    The sign makes ``d_j lambda(f) = lambda(i t_j f)``.
    """
    u = np.asarray(u)
    n = u.shape[0]
    lad = ladder_matrices(cfg)
    X = lad["Q"] if j == 0 else -1j * lad["Dq"]
    x = embed(u, cfg.N_pad)
    out = 1j / math.sqrt(cfg.h) * (X @ x - x @ X)
    return out[:n, :n] if n < cfg.N_pad else out


def heat_origin_value(t: float, diag: np.ndarray, h: float = 1.0) -> float:
    """Exact vacuum expectation ``<0| exp(-t Delta) u |0>`` of the untruncated semigroup.

    Only the diagonal of ``u`` contributes:
    ``sum_n u_nn (m/(m+1))^n / (m+1)`` with ``m = 2t/h``.  For positive
    ``u`` this is a lower bound on the operator norm of the heat image.
    """
    d = np.real(np.asarray(diag))
    m = 2.0 * t / h
    n = np.arange(d.size)
    logq = -np.log1p(1.0 / m)
    return float(np.sum(d * np.exp(n * logq)) / (m + 1.0))


@dataclass
class TauberianReport:
    value: float
    trend: float
    extrapolated: float
    t_grid: np.ndarray
    samples: np.ndarray


def _space_for(cfg: ModelConfig, t_max: float) -> int:
    return cfg.N + int(math.ceil(30.0 * (t_max + 1.0) / cfg.h)) + 32


def heat_sup_norms(cfg: ModelConfig, u: np.ndarray, t_grid: Sequence[float],
                   dim: Optional[int] = None) -> np.ndarray:
    """Operator norms of ``exp(-t Delta) u`` on a space large enough for ``max(t_grid)``.

    Uses the generator route band by band so only ``2N - 1`` band
    eigendecompositions are ever held at once.
    """
    u = np.asarray(u)
    n = u.shape[0]
    ts = np.asarray(t_grid, dtype=float)
    M = dim or _space_for(cfg, float(ts.max()))
    gen = HeatGenerator(M, cfg.h, cache=False)
    kmax = max((k for k in range(n) if np.any(np.diagonal(u, -k)) or np.any(np.diagonal(u, k))), default=0)
    # lower banded storage: ab[i, j] = A[j + i, j]
    bands = np.zeros((len(ts), kmax + 1, M), dtype=complex)
    for k in range(kmax + 1):
        vec = np.zeros(M - k, dtype=complex)
        vec[: n - k] = np.diagonal(u, -k)
        lam, vecs = gen.band(k)
        coef = vecs.T @ vec
        for i, t in enumerate(ts):
            bands[i, k, : M - k] = vecs @ (np.exp(-t * lam) * coef)
    out = np.empty(len(ts))
    for i in range(len(ts)):
        if kmax == 0:
            out[i] = np.abs(bands[i, 0].real).max()
        else:
            ev = eigvals_banded(bands[i], lower=True, select="i", select_range=(M - 1, M - 1))
            out[i] = abs(ev[-1])
            lo = eigvals_banded(bands[i], lower=True, select="i", select_range=(0, 0))
            out[i] = max(out[i], abs(lo[0]))
    return out


def default_tauberian_grid(t_min: float = 0.1, t_max: float = 50.0, n: int = 30) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)


def tauberian_functional(cfg: ModelConfig, u: np.ndarray, t_grid=None,
                         rise_tol: float = 0.05) -> TauberianReport:
    """``max_t (4 pi t) ||exp(-t Delta) u||_inf`` over a log grid.

    ``trend`` is the value at the last grid point and ``extrapolated`` a
    first-order (``1/t``) extrapolation from the last two points.

    Raises
    ------
    GridTooShort
        If the log-log slope over the last grid interval exceeds ``rise_tol``.
    """
    ts = default_tauberian_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if ts.size < 2:
        raise GridTooShort("need at least two grid points")
    norms = heat_sup_norms(cfg, u, ts)
    vals = 4.0 * math.pi * ts * norms
    slope = math.log(vals[-1] / vals[-2]) / math.log(ts[-1] / ts[-2]) if vals[-2] > 0 else 0.0
    if slope > rise_tol:
        raise GridTooShort(f"functional still rising at t_max={ts[-1]:g} (slope {slope:.3f})")
    t1, t2 = ts[-2], ts[-1]
    extrap = (t2 * vals[-1] - t1 * vals[-2]) / (t2 - t1)
    return TauberianReport(value=float(vals.max()), trend=float(vals[-1]),
                           extrapolated=float(extrap), t_grid=ts, samples=vals)
