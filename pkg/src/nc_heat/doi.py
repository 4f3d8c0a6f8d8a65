"""Double operator integrals for Hermitian matrix pairs and the power-difference estimate.

For positive ``A, B`` and ``p > 1`` the symbol

    phi(l, m) = (l^p - m^p) / ((l - m)(l^(p-1) + m^(p-1)))

turns ``A^(p-1)(A-B) + (A-B)B^(p-1)`` into ``A^p - B^p`` exactly.  Writing
``l/m = e^t`` gives ``phi = 1 + f(t)/2`` with

    f(t) = sinh((p/2 - 1) t) / (cosh((p - 1) t / 2) sinh(t / 2)),

so the Schur-multiplier norm of ``phi`` is at most ``c_p = 1 + ||f_hat||_1 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .algebra import adjoint
from .errors import BoundViolated, DimensionMismatch, NotConverged, NotPositive
from .lp import _norm_from_values, singular_values


@dataclass(frozen=True)
class SpectralPair:
    A_eigvals: np.ndarray
    B_eigvals: np.ndarray
    A_basis: np.ndarray
    B_basis: np.ndarray


def spectral_pair(A: np.ndarray, B: np.ndarray, rtol: float = 1e-10) -> SpectralPair:
    """Eigendecompose a Hermitian pair, verifying the reconstruction."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape}")
    la, ua = np.linalg.eigh(0.5 * (A + adjoint(A)))
    lb, ub = np.linalg.eigh(0.5 * (B + adjoint(B)))
    for M, l, u in ((A, la, ua), (B, lb, ub)):
        scale = max(np.linalg.norm(M), 1.0)
        if np.linalg.norm(M - (u * l) @ adjoint(u)) > rtol * scale:
            raise ValueError("matrix is not Hermitian to reconstruction tolerance")
    return SpectralPair(la, lb, ua, ub)


@dataclass(frozen=True)
class PhiKernel:
    """The power-difference symbol for exponent ``p``.

    Eigenvalues below ``zero_tol`` (absolute) are treated as exact zeros, for
    which the symbol is 1.  ``diagonal_override`` replaces the index diagonal
    ``Phi[i, i]`` of the symbol grid built by :func:`doi_apply` (a negative
    control; never set it for real computations).
    """

    p: float
    zero_tol: float = 0.0
    diagonal_override: Optional[float] = None

    def __call__(self, lam, mu):
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        lam, mu = np.broadcast_arrays(lam, mu)
        out = np.ones(lam.shape)
        inside = (lam > self.zero_tol) & (mu > self.zero_tol)
        if np.any(inside):
            lo = np.minimum(lam[inside], mu[inside])
            hi = np.maximum(lam[inside], mu[inside])
            # symmetric in (l, m); use ell = log(lo/hi) <= 0 so every exponential is bounded
            ell = np.log(lo) - np.log(hi)
            p = self.p
            with np.errstate(invalid="ignore", divide="ignore"):
                val = np.expm1(p * ell) / (np.expm1(ell) * (np.exp((p - 1.0) * ell) + 1.0))
            val = np.where(ell == 0.0, 0.5 * p, val)
            out[inside] = val
        return out

    def psi(self, lam, mu):
        return self(lam, mu) - 1.0


def phi_value(kernel: PhiKernel, lam: float, mu: float) -> float:
    if lam < 0 or mu < 0:
        raise ValueError("phi is defined on the closed positive quadrant")
    return float(kernel(lam, mu))


def schwartz_f(p: float, t):
    """The even function ``f`` with ``phi - 1 = f(log(l/m)) / 2``; ``f(0) = p - 2``."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    x = np.abs(np.asarray(t, dtype=float))
    a = p / 2.0 - 1.0
    b = (p - 1.0) / 2.0
    out = np.full(x.shape, p - 2.0)
    pos = x > 0
    xp = x[pos]
    if a != 0.0:
        # exponentials factored out so nothing overflows for large |t|
        num = -np.expm1(-2.0 * abs(a) * xp)
        den = (1.0 + np.exp(-2.0 * b * xp)) * (-np.expm1(-xp))
        out[pos] = 2.0 * math.copysign(1.0, a) * np.exp((abs(a) - b - 0.5) * xp) * num / den
    else:
        out[pos] = 0.0
    return out if out.ndim else float(out)


def _fhat_l1(p: float, extent: float, n: int) -> float:
    dt = extent / n
    t = (np.arange(n) - n // 2) * dt
    f = schwartz_f(p, t)
    fhat = dt * np.fft.fft(np.fft.ifftshift(f))
    dxi = 2.0 * math.pi / extent
    return float(np.sum(np.abs(fhat)) * dxi)


def estimate_cp(p: float, extent: float = 80.0, n: int = 2**14, check: bool = True,
                rtol: float = 0.005) -> float:
    """``c_p = 1 + ||f_hat||_1 / 2`` by FFT on ``[-extent/2, extent/2)``.

    Raises
    ------
    NotConverged
        If doubling the resolution or the extent moves the value by more
        than ``rtol``.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if abs(p - 2.0) < 1e-15:
        return 1.0
    val = 1.0 + 0.5 * _fhat_l1(p, extent, n)
    if check:
        finer = 1.0 + 0.5 * _fhat_l1(p, extent, 2 * n)
        wider = 1.0 + 0.5 * _fhat_l1(p, 2 * extent, 2 * n)
        change = max(abs(finer - val), abs(wider - val)) / val
        if change > rtol:
            raise NotConverged(f"c_p({p}) changed by {change:.2%} under grid doubling")
    return val


def doi_apply(pair: SpectralPair, kernel: Union[PhiKernel, np.ndarray], X: np.ndarray) -> np.ndarray:
    """``U_A (Phi * (U_A^* X U_B)) U_B^*`` with ``Phi[i, j] = phi(a_i, b_j)``."""
    X = np.asarray(X)
    n, m = pair.A_basis.shape[0], pair.B_basis.shape[0]
    if X.shape != (n, m):
        raise DimensionMismatch(f"X has shape {X.shape}, expected {(n, m)}")
    if isinstance(kernel, PhiKernel):
        phi = kernel(pair.A_eigvals[:, None], pair.B_eigvals[None, :])
        if kernel.diagonal_override is not None:
            np.fill_diagonal(phi, kernel.diagonal_override)
    else:
        phi = np.asarray(kernel)
        if phi.shape != (n, m):
            raise DimensionMismatch(f"symbol grid has shape {phi.shape}, expected {(n, m)}")
    inner = adjoint(pair.A_basis) @ X @ pair.B_basis
    return pair.A_basis @ (phi * inner) @ adjoint(pair.B_basis)


def matrix_power(u: np.ndarray, p: float, rtol: float = 1e-8) -> np.ndarray:
    """Functional-calculus power of a positive matrix (``p = 0`` gives the support projection).

    Raises
    ------
    NotPositive
        If the smallest eigenvalue is below ``-rtol * ||u||``.
    """
    u = np.asarray(u)
    lam, vecs = np.linalg.eigh(0.5 * (u + adjoint(u)))
    norm = np.abs(lam).max() if lam.size else 0.0
    if lam.size and lam.min() < -rtol * norm:
        raise NotPositive(f"min eigenvalue {lam.min():.3e} for norm {norm:.3e}")
    lam = np.clip(lam, 0.0, None)
    if p == 0:
        powered = (lam > 1e-12 * norm).astype(float)
    else:
        powered = lam**p
    return (vecs * powered) @ adjoint(vecs)


def random_positive(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """``X X^*`` for an i.i.d. standard complex Gaussian ``X``, normalized by ``dim``."""
    X = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    return scale * (X @ adjoint(X)) / dim


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    X = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    return (X + adjoint(X)) / math.sqrt(2.0 * dim)


def identity_residual(A: np.ndarray, B: np.ndarray, p: float, kernel: Optional[PhiKernel] = None):
    """Frobenius residual of the exact power-difference identity and its scale."""
    kernel = kernel or PhiKernel(p)
    Ap1, Bp1 = matrix_power(A, p - 1.0), matrix_power(B, p - 1.0)
    D = A - B
    X = Ap1 @ D + D @ Bp1
    lhs = matrix_power(A, p) - matrix_power(B, p)
    rhs = doi_apply(spectral_pair(A, B), kernel, X)
    scale = np.linalg.norm(matrix_power(A, p)) + np.linalg.norm(matrix_power(B, p))
    return float(np.linalg.norm(lhs - rhs)), float(scale)


def schatten(x: np.ndarray, q: float) -> float:
    return _norm_from_values(singular_values(x), q, 1.0)


def serialize_pair(p: float, q: float, seed: int, A: np.ndarray, B: np.ndarray,
                   trial: int = 0) -> str:
    """Text record of a counterexample: header lines then row-major re/im pairs."""
    lines = [f"p = {p!r}", f"q = {q!r}", f"seed = {seed}", f"trial = {trial}",
             f"dim = {A.shape[0]}"]
    for name, M in (("A", A), ("B", B)):
        flat = np.asarray(M, dtype=complex).ravel()
        lines.append(f"{name} = " + " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in flat))
    return "\n".join(lines) + "\n"


def parse_pair(text: str):
    fields = {}
    for line in text.strip().splitlines():
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    dim = int(fields["dim"])

    def mat(s):
        nums = np.array([float(v) for v in s.split()])
        return (nums[0::2] + 1j * nums[1::2]).reshape(dim, dim)

    return {"p": float(fields["p"]), "q": float(fields["q"]), "seed": int(fields["seed"]),
            "trial": int(fields.get("trial", 0)), "A": mat(fields["A"]), "B": mat(fields["B"])}


@dataclass
class NonlinearityReport:
    p: float
    q: float
    trials: int
    dim: int
    seed: int
    c_p: float
    max_theorem_ratio: float = 0.0
    max_corollary_ratio: float = 0.0
    max_absolute_ratio: float = 0.0
    max_identity_residual: float = 0.0


def verify_nonlinearity(p: float, q: float, trials: int, dim: int, seed: int,
                        kernel: Optional[PhiKernel] = None, c_p: Optional[float] = None,
                        raise_on_violation: bool = True) -> NonlinearityReport:
    """Randomized check of the power-difference bound and its Holder corollary.

    For positive pairs the ratios
    ``||A^p - B^p||_q / ||A^(p-1)(A-B) + (A-B)B^(p-1)||_q`` and
    ``||A^p - B^p||_q / (||A-B||_pq (||A||_pq^(p-1) + ||B||_pq^(p-1)))``
    must not exceed ``c_p``.  The same second ratio with ``|A|, |B|`` for
    indefinite Hermitian pairs is only recorded.

    ``kernel`` substitutes the symbol used to build ``A^p - B^p`` (a test
    hook for negative controls).

    Raises
    ------
    BoundViolated
        With the serialized pair, if a ratio exceeds ``c_p``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if c_p is None:
        c_p = 1.0 if p in (1.0, 2.0) else estimate_cp(p)
    rep = NonlinearityReport(p=p, q=q, trials=trials, dim=dim, seed=seed, c_p=c_p)
    pq = p * q
    for k in range(trials):
        rng = trial_rng(seed, k)
        A = random_positive(dim, rng)
        B = random_positive(dim, rng)
        X = matrix_power(A, p - 1.0) @ (A - B) + (A - B) @ matrix_power(B, p - 1.0)
        if kernel is None:
            diff = matrix_power(A, p) - matrix_power(B, p)
        else:
            diff = doi_apply(spectral_pair(A, B), kernel, X)
        thm = schatten(diff, q) / schatten(X, q)
        cor_den = schatten(A - B, pq) * (schatten(A, pq) ** (p - 1) + schatten(B, pq) ** (p - 1))
        cor = schatten(diff, q) / cor_den
        rep.max_theorem_ratio = max(rep.max_theorem_ratio, thm)
        rep.max_corollary_ratio = max(rep.max_corollary_ratio, cor)
        if max(thm, cor) > c_p * (1.0 + 1e-9):
            if raise_on_violation:
                raise BoundViolated(
                    f"ratio {max(thm, cor):.6f} exceeds c_p={c_p:.6f} at trial {k}",
                    record=serialize_pair(p, q, seed, A, B, trial=k),
                )
        H1, H2 = random_hermitian(dim, rng), random_hermitian(dim, rng)
        absdiff = matrix_power(_abs(H1), p) - matrix_power(_abs(H2), p)
        den = schatten(H1 - H2, pq) * (schatten(H1, pq) ** (p - 1) + schatten(H2, pq) ** (p - 1))
        rep.max_absolute_ratio = max(rep.max_absolute_ratio, schatten(absdiff, q) / den)
    return rep


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent per-trial stream derived from the master seed."""
    return np.random.default_rng([seed, trial])


def _abs(h: np.ndarray) -> np.ndarray:
    lam, vecs = np.linalg.eigh(0.5 * (h + adjoint(h)))
    return (vecs * np.abs(lam)) @ adjoint(vecs)
