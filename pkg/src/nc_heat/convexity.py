"""Completely positive maps, the operator Jensen inequality and its supporting facts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import roots_legendre

from .algebra import adjoint
from .doi import matrix_power, random_positive
from .errors import IllConditioned, JensenViolated, QuadratureUnderresolved


@dataclass(frozen=True)
class CPMap:
    """Kraus-form map ``x -> sum_i K_i x K_i^*``."""

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        object.__setattr__(self, "kraus", k)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        k = self.kraus
        return (k @ np.asarray(x) @ np.conj(np.swapaxes(k, 1, 2))).sum(axis=0)

    def unitality_defect(self) -> float:
        s = np.einsum("kij,klj->il", self.kraus, np.conj(self.kraus))
        return float(np.abs(s - np.eye(self.dim_out)).max())

    def trace_defect(self) -> float:
        s = np.einsum("kji,kjl->il", np.conj(self.kraus), self.kraus)
        return float(np.abs(s - np.eye(self.dim_in)).max())

    @property
    def unital(self) -> bool:
        return self.unitality_defect() <= 1e-10

    @property
    def trace_preserving(self) -> bool:
        return self.trace_defect() <= 1e-10

    def is_subunital(self, tol: float = 1e-10) -> bool:
        s = np.einsum("kij,klj->il", self.kraus, np.conj(self.kraus))
        return bool(np.linalg.eigvalsh(0.5 * (s + adjoint(s))).max() <= 1.0 + tol)

    def lift(self, n: int = 2) -> "CPMap":
        """``Phi (x) id_n`` acting on ``n x n`` block matrices."""
        eye = np.eye(n)
        return CPMap(np.array([np.kron(eye, k) for k in self.kraus]))


def _inv_sqrt(s: np.ndarray) -> np.ndarray:
    lam, vecs = np.linalg.eigh(0.5 * (s + adjoint(s)))
    return (vecs / np.sqrt(lam)) @ adjoint(vecs)


def random_unital_cp(dim: int, n_kraus: int, seed: int) -> CPMap:
    """Unital CP map from Gaussian Kraus seeds, normalized by ``S^(-1/2)``.

    With ``S = sum G_i G_i^*`` the family ``K_i = S^(-1/2) G_i`` satisfies
    ``sum K_i K_i^* = I``; a single Kraus operator comes out unitary.
    """
    if dim < 2 or n_kraus < 1:
        raise ValueError("need dim >= 2 and n_kraus >= 1")
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((n_kraus, dim, dim)) + 1j * rng.standard_normal((n_kraus, dim, dim)))
    S = np.einsum("kij,klj->il", G, np.conj(G))
    root = _inv_sqrt(S)
    return CPMap(np.einsum("ij,kjl->kil", root, G))


def unitary_mixture(unitaries, weights) -> CPMap:
    w = np.asarray(weights, dtype=float)
    return CPMap(np.sqrt(w)[:, None, None] * np.asarray(unitaries, dtype=complex))


def serialize_jensen(phi: CPMap, u: np.ndarray, p: float, seed: Optional[int] = None) -> str:
    """Structured text: header lines, then row-major re/im pairs of ``u`` and each Kraus operator."""
    lines = [f"p = {p!r}", f"seed = {seed}", f"dim = {u.shape[0]}", f"dim_out = {phi.dim_out}",
             f"n_kraus = {phi.kraus.shape[0]}"]
    lines.append("u = " + " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in np.asarray(u, complex).ravel()))
    for i, k in enumerate(phi.kraus):
        lines.append(f"K{i} = " + " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in k.ravel()))
    return "\n".join(lines) + "\n"


def parse_jensen(text: str):
    fields = dict((a.strip(), b.strip()) for a, _, b in
                  (line.partition("=") for line in text.strip().splitlines()))
    dim, nk = int(fields["dim"]), int(fields["n_kraus"])
    dim_out = int(fields.get("dim_out", dim))

    def mat(s, rows):
        nums = np.array([float(v) for v in s.split()])
        return (nums[0::2] + 1j * nums[1::2]).reshape(rows, -1)

    kraus = np.array([mat(fields[f"K{i}"], dim_out) for i in range(nk)])
    seed = None if fields["seed"] == "None" else int(fields["seed"])
    return {"p": float(fields["p"]), "seed": seed, "u": mat(fields["u"], dim), "phi": CPMap(kraus)}


def jensen_gap(phi: CPMap, u: np.ndarray, p: float, check: bool = True,
               rtol: float = 1e-9) -> float:
    """Smallest eigenvalue of ``Phi(u^p) - Phi(u)^p``.

    Raises
    ------
    JensenViolated
        If ``check`` and the gap is below ``-rtol * ||u||^p``.
    """
    up = matrix_power(u, p)
    gap = phi(up) - matrix_power(phi(u), p)
    val = float(np.linalg.eigvalsh(0.5 * (gap + adjoint(gap))).min())
    scale = float(np.abs(np.linalg.eigvalsh(0.5 * (u + adjoint(u)))).max()) ** p
    if check and val < -rtol * max(scale, 1e-300):
        raise JensenViolated(f"Jensen gap {val:.3e} at p={p}", record=serialize_jensen(phi, u, p))
    return val


def _min_eig(x: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (x + adjoint(x))).min())


def schur_positive(A: np.ndarray, B: np.ndarray, C: np.ndarray, rtol: float = 1e-10):
    """Positivity of ``[[A, B], [B*, C]]`` and of ``C - B* A^-1 B``.

    Returns the pair ``(block_positive, complement_positive)``; for
    invertible positive ``A`` the two agree.

    Raises
    ------
    IllConditioned
        If ``A`` is not safely positive definite.
    """
    A, B, C = (np.asarray(m, dtype=complex) for m in (A, B, C))
    lamA = np.linalg.eigvalsh(0.5 * (A + adjoint(A)))
    if lamA.min() <= rtol * abs(lamA).max():
        raise IllConditioned(f"A has min eigenvalue {lamA.min():.3e}")
    block = np.block([[A, B], [adjoint(B), C]])
    scale = max(np.abs(np.linalg.eigvalsh(0.5 * (block + adjoint(block)))).max(), 1.0)
    comp = C - adjoint(B) @ np.linalg.solve(A, B)
    return _min_eig(block) >= -rtol * scale, _min_eig(comp) >= -rtol * scale


def power_integral(x: np.ndarray, p: float, panels: int = 80, nodes: int = 16,
                   s_max: float = 40.0) -> np.ndarray:
    """``x^p`` from the resolvent integral ``(|sin p pi| / pi) int t^(p-2) x^2 (t + x)^-1 dt``.

    Substitutes ``t = e^s`` on ``|s| <= s_max`` with composite Gauss-Legendre
    panels and adds the leading analytic tails ``x e^{-(p-1) s_max} / (p-1)``
    and ``x^2 e^{-(2-p) s_max} / (2-p)``.
    """
    if not 1 < p < 2:
        raise ValueError("p must lie in (1, 2)")
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    eye = np.eye(n)
    x2 = x @ x
    g, w = roots_legendre(nodes)
    edges = np.linspace(-s_max, s_max, panels + 1)
    acc = np.zeros_like(x)
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b - a) * g + 0.5 * (a + b)
        ws = 0.5 * (b - a) * w
        for si, wi in zip(s, ws):
            t = math.exp(si)
            acc += wi * t ** (p - 1.0) * np.linalg.solve(t * eye + x, x2)
    acc += x * math.exp(-(p - 1.0) * s_max) / (p - 1.0)
    acc += x2 * math.exp(-(2.0 - p) * s_max) / (2.0 - p)
    return abs(math.sin(p * math.pi)) / math.pi * acc


def power_integral_check(x: np.ndarray, p: float, tol: float = 1e-6, check: bool = True,
                         **quad) -> float:
    """Relative Frobenius error of :func:`power_integral` against the eigen-route power.

    Raises
    ------
    QuadratureUnderresolved
        If ``check`` and the error exceeds ``tol``.
    """
    ref = matrix_power(x, p)
    err = float(np.linalg.norm(power_integral(x, p, **quad) - ref) / np.linalg.norm(ref))
    if check and err > tol:
        raise QuadratureUnderresolved(f"resolvent integral error {err:.2e} at p={p}")
    return err


def heat_cp_map(cfg, t: float) -> CPMap:
    """Working-block compression of the quadrature heat channel (sub-unital CP)."""
    from .heat import heat_channel

    return CPMap(heat_channel(cfg, t).kraus_operators())


def search_jensen_counterexample(p: float = 3.0, dim: int = 4, trials: int = 2000,
                                 seed: int = 0, threshold: float = -1e-4):
    """Random search for ``min eig(Phi(u^p) - Phi(u)^p) < threshold``.

    Candidate maps are compressions ``V^* x V`` by random isometries mixed
    with random unital Kraus maps, and ``u`` is scaled to unit norm; returns
    ``(gap, phi, u, trial)`` for
    the most negative gap found, stopping at the first one below
    ``threshold``.
    """
    best = (math.inf, None, None, None)
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        if k % 2 == 0:
            big = 2 * dim
            Z = rng.standard_normal((big, dim)) + 1j * rng.standard_normal((big, dim))
            V, _ = np.linalg.qr(Z)
            phi = CPMap(adjoint(V)[None])
            u = random_positive(big, rng)
        else:
            phi = random_unital_cp(dim, int(rng.integers(1, 4)), int(rng.integers(2**31)))
            u = random_positive(dim, rng)
        u = u / np.linalg.eigvalsh(u).max()
        gap = jensen_gap(phi, u, p, check=False)
        if gap < best[0]:
            best = (gap, phi, u, k)
        if gap < threshold:
            break
    return best
