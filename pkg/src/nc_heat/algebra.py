"""Truncated Hermite-basis matrix model of the Moyal plane.

Operators are plain square complex ``numpy`` arrays in the Hermite-function
basis of L2(R).  The deformation matrix is ``theta = h * J`` with
``J = [[0, -1], [1, 0]]``.  The Weyl unitary is

    W(z) = exp(i sqrt(h) (z_2 Q - z_1 P)),

which acts on wavefunctions as ``(W f)(s) = exp(i c2 (s - c1/2)) f(s - c1)``
with ``c = sqrt(h) z``.  With this normalization

    W(t) W(s) = exp(i/2 (t, theta s)) W(t + s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_legendre

from ._hermite import hermite_functions, scaled_gauss_hermite
from .errors import CalibrationUnstable, LeakageExceeded

J = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ModelConfig:
    """Truncation and calibration parameters of the matrix model.

    Parameters
    ----------
    N : int
        Working-block dimension.
    N_pad : int, optional
        Padded dimension used while a channel is applied.  Defaults to ``2 N``.
    h : float
        Deformation scalar.
    quad_order : int
        Gauss-Hermite nodes per axis for heat-channel quadrature.
    c_tau : float, optional
        Trace calibration constant; ``None`` until :func:`calibrate_trace`
        has been run (see :meth:`calibrated`).
    tol_leak : float
        Largest relative mass a channel may push outside the working block.
    """

    N: int = 48
    N_pad: Optional[int] = None
    h: float = 1.0
    quad_order: int = 20
    c_tau: Optional[float] = None
    tol_leak: float = 1e-6

    def __post_init__(self):
        if self.N_pad is None:
            object.__setattr__(self, "N_pad", 2 * self.N)
        if self.N < 2 or self.N_pad < self.N:
            raise ValueError(f"need N_pad >= N >= 2, got N={self.N}, N_pad={self.N_pad}")
        if self.quad_order < 4:
            raise ValueError("quad_order must be >= 4")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.c_tau is not None and not self.c_tau > 0:
            raise ValueError("c_tau must be positive")

    @property
    def theta(self) -> np.ndarray:
        return self.h * J

    @property
    def tau_constant(self) -> float:
        if self.c_tau is None:
            raise ValueError("configuration is not calibrated; call cfg.calibrated()")
        return self.c_tau

    def calibrated(self) -> "ModelConfig":
        """Copy with ``c_tau`` set from the Gaussian operator."""
        return replace(self, c_tau=calibrate_trace(self))

    def with_dims(self, N: int, N_pad: Optional[int] = None) -> "ModelConfig":
        return replace(self, N=N, N_pad=N_pad if N_pad is not None else 2 * N)


def model_config(N=48, N_pad=None, h=1.0, quad_order=20, tol_leak=1e-6, calibrate=True):
    cfg = ModelConfig(N=N, N_pad=N_pad, h=h, quad_order=quad_order, tol_leak=tol_leak)
    return cfg.calibrated() if calibrate else cfg


# --- operator helpers -----------------------------------------------------

def adjoint(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def hermitian_part(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + adjoint(x))


def is_hermitian(x: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.abs(x).max(), 1.0) if x.size else 1.0
    return bool(np.abs(x - adjoint(x)).max() <= rtol * scale) if x.size else True


def is_positive(x: np.ndarray, rtol: float = 1e-10) -> bool:
    if not is_hermitian(x):
        return False
    ev = np.linalg.eigvalsh(hermitian_part(x))
    norm = np.abs(ev).max() if ev.size else 0.0
    return bool(ev.min() >= -rtol * norm)


def embed(x: np.ndarray, dim: int) -> np.ndarray:
    """Place ``x`` in the top-left corner of a ``dim x dim`` zero matrix."""
    n = x.shape[0]
    if n == dim:
        return np.array(x, dtype=complex)
    out = np.zeros((dim, dim), dtype=complex)
    out[:n, :n] = x
    return out


def outside_mass(y: np.ndarray, n: int) -> float:
    """Relative Frobenius mass of ``y`` outside its top-left ``n x n`` block."""
    total = np.linalg.norm(y)
    if total == 0.0:
        return 0.0
    inner = np.linalg.norm(y[:n, :n])
    return float(math.sqrt(max(total**2 - inner**2, 0.0)) / total)


# --- ladder matrices ------------------------------------------------------

def ladder_matrices(cfg: ModelConfig) -> dict:
    """Position ``Q`` and derivative ``Dq`` on the padded Hermite basis.

    ``Q`` is real symmetric tridiagonal, ``Dq`` real antisymmetric; the
    momentum is ``P = -1j * Dq``.
    """
    n = cfg.N_pad
    off = np.sqrt(np.arange(1, n) / 2.0)
    Q = np.diag(off, 1) + np.diag(off, -1)
    Dq = np.diag(off, 1) - np.diag(off, -1)
    return {"Q": Q.astype(complex), "Dq": Dq.astype(complex)}


def annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


# --- Weyl unitaries -------------------------------------------------------

def _weyl_matrix(dim: int, c1: float, c2: float, order: int) -> np.ndarray:
    # s = u + c1/2 centers the integrand; integrand * exp(u^2) is
    # polynomial times exp(i c2 u) times exp(-c1^2/4).
    u, ws = scaled_gauss_hermite(order)
    plus = hermite_functions(dim, u + 0.5 * c1)
    minus = hermite_functions(dim, u - 0.5 * c1)
    return (plus * (ws * np.exp(1j * c2 * u))) @ minus.T


def _quad_nodes(dim: int) -> int:
    return dim + 64


def unitarity_defect(w: np.ndarray, n: int) -> float:
    g = (w @ adjoint(w))[:n, :n]
    return float(np.abs(g - np.eye(n)).max())


def weyl_operator(cfg: ModelConfig, zeta, check: bool = True) -> np.ndarray:
    """``N_pad x N_pad`` matrix of the displacement unitary ``W(zeta)``.

    Entries are exact compressions of the infinite-dimensional operator up
    to quadrature round-off; only the unitarity on the working block
    degrades when ``|zeta|`` approaches the edge of the padded space.

    Raises
    ------
    LeakageExceeded
        If ``check`` and the unitarity defect on the working block exceeds
        ``cfg.tol_leak``.
    """
    z = np.asarray(zeta, dtype=float).reshape(2)
    if not np.all(np.isfinite(z)):
        raise ValueError("zeta must be finite")
    c1, c2 = math.sqrt(cfg.h) * z
    w = _weyl_matrix(cfg.N_pad, c1, c2, _quad_nodes(cfg.N_pad))
    if check:
        defect = unitarity_defect(w, cfg.N)
        if defect > cfg.tol_leak:
            raise LeakageExceeded(
                f"unitarity defect {defect:.2e} on the working block at zeta={z.tolist()}",
                leakage=defect,
            )
    return w


def weyl_operator_laguerre(cfg: ModelConfig, zeta) -> np.ndarray:
    """Closed-form displacement matrix via associated Laguerre polynomials.

    Independent of the quadrature route; used as a cross-check.
    """
    z = np.asarray(zeta, dtype=float).reshape(2)
    alpha = math.sqrt(cfg.h) * (z[0] + 1j * z[1]) / math.sqrt(2.0)
    x = abs(alpha) ** 2
    n = cfg.N_pad
    m_idx, n_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    lo = np.minimum(m_idx, n_idx)
    hi = np.maximum(m_idx, n_idx)
    k = hi - lo
    lag = eval_genlaguerre(lo, k, x)
    if x > 0:
        logmag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + k * math.log(abs(alpha)) - 0.5 * x
        mag = np.exp(logmag)
    else:
        mag = np.where(k == 0, 1.0, 0.0)
    phase_lower = np.exp(1j * k * np.angle(alpha))          # m >= n: alpha^k
    phase_upper = (-1.0) ** k * np.exp(-1j * k * np.angle(alpha))  # m < n: (-conj alpha)^k
    phase = np.where(m_idx >= n_idx, phase_lower, phase_upper)
    return mag * phase * lag


# --- quantization ---------------------------------------------------------

def lambda_theta(
    cfg: ModelConfig,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    support_radius: float,
    order: int = 96,
    dim: Optional[int] = None,
) -> np.ndarray:
    """Working-block matrix of ``int f(t) W(t) dt`` over ``[-R, R]^2``.

    ``f`` must accept broadcast arrays ``(t1, t2)``.  The ``t2`` integral is
    folded into a partial Fourier transform evaluated at the Gauss-Hermite
    position nodes, so the cost is one ``dim x K x dim`` product per ``t1``
    node.
    """
    dim = cfg.N if dim is None else dim
    R = float(support_radius)
    sh = math.sqrt(cfg.h)
    K = _quad_nodes(dim)
    u, ws = scaled_gauss_hermite(K)
    # t2 integrand oscillates like exp(i sqrt(h) t2 u); resolve the largest u
    n2 = max(order, int(math.ceil(sh * R * np.abs(u).max() / 2.0)) + 32)
    x1, w1 = roots_legendre(order)
    x2, w2 = roots_legendre(n2)
    t1, w1 = R * x1, R * w1
    t2, w2 = R * x2, R * w2
    fvals = np.asarray(f(t1[:, None], t2[None, :]), dtype=complex) * np.ones((order, n2))
    if not np.any(fvals):
        return np.zeros((dim, dim), dtype=complex)
    fourier = (fvals * w2) @ np.exp(1j * sh * np.outer(t2, u))   # (order, K)
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(order):
        c1 = sh * t1[i]
        plus = hermite_functions(dim, u + 0.5 * c1)
        minus = hermite_functions(dim, u - 0.5 * c1)
        out += w1[i] * ((plus * (ws * fourier[i])) @ minus.T)
    return out


# --- translations ---------------------------------------------------------

def inner_translation_vector(cfg: ModelConfig, s) -> np.ndarray:
    """Vector ``a`` with ``T_s(x) = W(a) x W(a)*``.

    ``a = J s / h`` makes ``(a, theta t) = (s, t)``, which is what the
    defining relation ``T_s(W(t)) = exp(i (s, t)) W(t)`` requires.
    """
    return J @ np.asarray(s, dtype=float).reshape(2) / cfg.h


def translate(cfg: ModelConfig, s, x: np.ndarray, check: bool = True) -> np.ndarray:
    """Apply the translation automorphism ``T_s`` to a working-block operator.

    ``x`` may be ``N x N`` (result is projected back to the working block)
    or ``N_pad x N_pad`` (result returned on the padded space).
    """
    x = np.asarray(x)
    s = np.asarray(s, dtype=float).reshape(2)
    if not np.any(s):
        return np.array(x, dtype=complex)
    w = weyl_operator(cfg, inner_translation_vector(cfg, s), check=False)
    n = x.shape[0]
    if n == cfg.N_pad:
        return w @ x @ adjoint(w)
    y = w @ embed(x, cfg.N_pad) @ adjoint(w)
    leak = outside_mass(y, n)
    if check and leak > cfg.tol_leak:
        raise LeakageExceeded(f"translation leaked {leak:.2e} outside the working block", leak)
    return y[:n, :n]


# --- trace ----------------------------------------------------------------

def calibrate_trace(cfg: ModelConfig, times=(0.5, 1.0, 2.0), rtol: float = 0.01) -> float:
    """``c_tau = 1 / trace(G_1)`` on the working block (capped at 96 modes).

    The constant does not depend on ``N`` once the probe Gaussians fit, so
    large models calibrate on a 96-mode block.

    Raises
    ------
    CalibrationUnstable
        If the constants obtained at the probe times differ by more than
        ``rtol`` (the working block is too small to hold the wider Gaussians).
    """
    from .heat import gaussian_operator

    dim = min(cfg.N, 96)
    consts = {t: 1.0 / np.trace(gaussian_operator(cfg, t, dim=dim)).real for t in times}
    ref = consts.get(1.0, next(iter(consts.values())))
    spread = max(abs(c / ref - 1.0) for c in consts.values())
    if spread > rtol:
        raise CalibrationUnstable(
            f"trace constant varies by {spread:.2%} across t={list(times)}; increase N"
        )
    return float(ref)


def tau(cfg: ModelConfig, x: np.ndarray) -> complex:
    """Calibrated trace ``c_tau * trace(x)``."""
    return cfg.tau_constant * np.trace(x)
