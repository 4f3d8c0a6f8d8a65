"""Commutative reference: spectral heat solver on a periodic box in d = 1, 2, 3.

Fields live on ``[-L, L)^d`` with ``n`` points per axis.  The box doubles
(with coarsening when the field is well resolved) whenever the mass outside
``|x|_inf <= L/2`` exceeds the box tolerance, so long horizons stay
truncation-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BoxTooSmall
from .evolve import (CellSettings, Certificate, SweepRecord, classify_cell, default_certificate_grid,
                     fujita_sweep, lemma61_certificate)


@dataclass(frozen=True)
class GridField:
    """Samples of a function on the periodic box ``[-L, L)^d``."""

    d: int
    L: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if v.shape != (self.n,) * self.d:
            raise ValueError(f"values must have shape {(self.n,) * self.d}")
        object.__setattr__(self, "values", v)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell(self) -> float:
        return self.dx ** self.d

    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    def radius2(self) -> np.ndarray:
        x = self.axis()
        grids = np.meshgrid(*([x] * self.d), indexing="ij")
        return sum(g * g for g in grids)

    def mass(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.cell)

    def boundary_fraction(self) -> float:
        """L^1 mass outside ``|x|_inf <= L/2`` relative to the total."""
        total = np.sum(np.abs(self.values))
        if total == 0:
            return 0.0
        inner = np.abs(self.axis()) <= 0.5 * self.L
        mask = inner
        for _ in range(self.d - 1):
            mask = np.multiply.outer(mask, inner)
        return float(np.sum(np.abs(self.values[~mask])) / total)

    def _same(self, other: "GridField"):
        if (self.d, self.L, self.n) != (other.d, other.L, other.n):
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, GridField):
            self._same(other)
            return GridField(self.d, self.L, self.n, self.values + other.values)
        return GridField(self.d, self.L, self.n, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridField):
            self._same(other)
            return GridField(self.d, self.L, self.n, self.values - other.values)
        return GridField(self.d, self.L, self.n, self.values - other)

    def __mul__(self, c):
        return GridField(self.d, self.L, self.n, self.values * c)

    __rmul__ = __mul__
    __radd__ = __add__


def gaussian_field(d: int, L: float, n: int, t: float, amplitude: float = 1.0) -> GridField:
    """``amplitude * G_t`` with ``G_t(x) = (4 pi t)^(-d/2) exp(-|x|^2 / 4t)``."""
    proto = GridField(d, L, n, np.zeros((n,) * d))
    vals = amplitude * (4 * math.pi * t) ** (-d / 2) * np.exp(-proto.radius2() / (4 * t))
    return GridField(d, L, n, vals)


def _wavenumbers2(d: int, L: float, n: int) -> np.ndarray:
    k = 2 * math.pi * np.fft.fftfreq(n, d=2.0 * L / n)
    grids = np.meshgrid(*([k] * d), indexing="ij")
    return sum(g * g for g in grids)


def _heat_raw(field: GridField, t: float) -> GridField:
    k2 = _wavenumbers2(field.d, field.L, field.n)
    vals = np.real(np.fft.ifftn(np.fft.fftn(field.values) * np.exp(-t * k2)))
    # round-off negatives from the transform
    vals[(vals < 0) & (vals > -1e-14 * max(np.abs(vals).max(), 1e-300))] = 0.0
    return GridField(field.d, field.L, field.n, vals)


def heat_apply_classical(field: GridField, t: float, box_tol: float = 1e-8) -> GridField:
    """Multiply by ``exp(-t |xi|^2)`` on the discrete frequency lattice.

    Raises
    ------
    BoxTooSmall
        If the result carries more than ``box_tol`` of its mass near the box edge.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    out = _heat_raw(field, t)
    frac = out.boundary_fraction()
    if frac > box_tol:
        raise BoxTooSmall(f"boundary mass fraction {frac:.2e}", boundary_fraction=frac)
    return out


def _resolved(values: np.ndarray, tol: float = 1e-12) -> bool:
    """Spectral energy in the upper half of every axis below ``tol`` of the total."""
    spec = np.abs(np.fft.fftn(values)) ** 2
    total = spec.sum()
    if total == 0:
        return True
    n = values.shape[0]
    high = np.abs(np.fft.fftfreq(n)) >= 0.25
    for ax in range(values.ndim):
        shape = [1] * values.ndim
        shape[ax] = n
        if spec[np.broadcast_to(high.reshape(shape), spec.shape)].sum() > tol * total:
            return False
    return True


def expand_box(field: GridField, max_n: Optional[int] = None) -> GridField:
    """Double ``L``; keep ``n`` by coarsening when resolved, otherwise double ``n``.

    Raises
    ------
    BoxTooSmall
        If doubling ``n`` would exceed ``max_n``.
    """
    d, n = field.d, field.n
    if n % 4 == 0 and _resolved(field.values):
        new = np.zeros((n,) * d)
        sl = tuple(slice(n // 4, n // 4 + n // 2) for _ in range(d))
        new[sl] = field.values[tuple(slice(0, n, 2) for _ in range(d))]
        return GridField(d, 2 * field.L, n, new)
    if max_n is not None and 2 * n > max_n:
        raise BoxTooSmall(f"expansion needs n={2 * n} > {max_n}", boundary_fraction=field.boundary_fraction())
    new = np.zeros((2 * n,) * d)
    sl = tuple(slice(n // 2, n // 2 + n) for _ in range(d))
    new[sl] = field.values
    return GridField(d, 2 * field.L, 2 * n, new)


def refine_grid(field: GridField) -> GridField:
    """Double ``n`` on the same box by Fourier zero-padding (``n`` even)."""
    d, n = field.d, field.n
    if n % 2:
        raise ValueError("refinement needs an even n")
    spec = np.fft.fftshift(np.fft.fftn(field.values))
    for ax in range(d):
        moved = np.moveaxis(spec, ax, 0)
        out = np.zeros((2 * n,) + moved.shape[1:], dtype=complex)
        out[n // 2: n // 2 + n] = moved
        # split the Nyquist mode between +-n/2
        out[n // 2] *= 0.5
        out[n // 2 + n] = out[n // 2]
        spec = np.moveaxis(out, 0, ax)
    vals = np.real(np.fft.ifftn(np.fft.ifftshift(spec))) * 2**d
    return GridField(d, field.L, 2 * n, vals)


class GridModel:
    """Backend for the shared solvers with grid fields as states."""

    # scalar Jensen holds for every convex power
    certificate_p_max = math.inf

    def __init__(self, d: int, L: float, n: int, box_tol: float = 1e-8, max_n: Optional[int] = None,
                 resolve_tol: float = 1e-12):
        self.d, self.L, self.n = d, L, n
        self.box_tol = box_tol
        self.resolve_tol = resolve_tol
        self.max_n = max_n if max_n is not None else {1: 1 << 17, 2: 2048, 3: 256}[d]

    def describe(self) -> dict:
        return {"model": f"classical-d{self.d}", "L": self.L, "n": self.n, "box_tol": self.box_tol}

    def gaussian_data(self, amplitude: float, t0: float = 1.0) -> GridField:
        return gaussian_field(self.d, self.L, self.n, t0, amplitude)

    def prepare(self, u):
        return u

    def heat(self, u: GridField, t: float) -> GridField:
        return u if t == 0 else _heat_raw(u, t)

    def power(self, u: GridField, p: float) -> GridField:
        return GridField(u.d, u.L, u.n, np.clip(u.values, 0.0, None) ** p)

    def norm(self, u: GridField, q: float) -> float:
        a = np.abs(u.values)
        if q == math.inf:
            return float(a.max())
        top = a.max()
        if top == 0:
            return 0.0
        return float(top * (np.sum((a / top) ** q) * u.cell) ** (1.0 / q))

    def sup(self, u: GridField) -> float:
        return float(np.abs(u.values).max())

    def min_eig(self, u: GridField) -> float:
        return float(u.values.min())

    def trace(self, u: GridField) -> float:
        return float(np.sum(u.values) * u.cell)

    def sup_heat(self, u: GridField, ts: Sequence[float]) -> np.ndarray:
        """``(exp(t Delta) u)(x0)`` at the peak ``x0`` of ``u``, a lower bound on the sup norm.

        Evaluated by direct quadrature of the Gaussian kernel, which needs no
        box; for ``t`` within a few grid cells squared the spectral image is
        used as well.
        """
        idx = np.unravel_index(np.argmax(u.values), u.values.shape)
        x = u.axis()
        x0 = np.array([x[i] for i in idx])
        grids = np.meshgrid(*([x] * u.d), indexing="ij")
        r2 = sum((g - c) ** 2 for g, c in zip(grids, x0))
        mask = u.values > 0
        vals, r2 = u.values[mask], r2[mask]
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            out[i] = (4 * math.pi * t) ** (-u.d / 2) * np.sum(vals * np.exp(-r2 / (4 * t))) * u.cell
            if t < 25 * u.dx**2:
                out[i] = max(out[i], self.sup(_heat_raw(u, t)))
        return out

    def check(self, u: GridField) -> None:
        if not np.all(np.isfinite(u.values)):
            raise BoxTooSmall("non-finite values", boundary_fraction=math.nan)

    def adapt(self, u: GridField) -> GridField:
        """Refine while under-resolved, then expand until the boundary mass is below ``box_tol / 10``."""
        while 2 * u.n <= self.max_n and not _resolved(u.values, self.resolve_tol):
            u = refine_grid(u)
        while u.boundary_fraction() > 0.1 * self.box_tol:
            u = expand_box(u, self.max_n)
        return u

    def grid_info(self, u: GridField) -> dict:
        return {"d": u.d, "L": float(u.L), "n": int(u.n)}


def lemma61_certificate_classical(field: GridField, p: float,
                                  t_grid: Optional[Sequence[float]] = None) -> Certificate:
    model = GridModel(field.d, field.L, field.n)
    return lemma61_certificate(model, field, p, t_grid)


def critical_amplitude(d: int, p: float, t0: float, t_grid: Sequence[float], lo: float = 1e-8,
                       hi: float = 1e8, iters: int = 200, L: float = 40.0, n: int = 2048) -> float:
    """Smallest amplitude ``A`` with a positive certificate margin for ``A * G_t0``, by bisection."""
    base = gaussian_field(d, L, n, t0)
    model = GridModel(d, L, n)
    sups = model.sup_heat(base, t_grid)
    ts = np.asarray(t_grid, dtype=float)

    def margin(a):
        return float(np.max(ts ** (1.0 / (p - 1.0)) * a * sups) - (p - 1.0) ** (-1.0 / (p - 1.0)))

    if margin(hi) <= 0 or margin(lo) > 0:
        raise ValueError("bisection interval does not bracket the critical amplitude")
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if margin(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi / lo - 1 < 1e-14:
            break
    return hi


def evolve_classical(field: GridField, p: float, horizon: float, settings: CellSettings = CellSettings(),
                     amplitude: float = math.nan, seed: int = 0, box_tol: float = 1e-8,
                     keep_trajectory: bool = False):
    """Classify one classical run with the shared thresholds."""
    model = GridModel(field.d, field.L, field.n, box_tol=box_tol)
    return classify_cell(model, model.adapt(field), p, horizon, amplitude=amplitude, settings=settings,
                         seed=seed, keep_trajectory=keep_trajectory)


def classical_gaussian_data(t0: float = 1.0):
    def make(model, amp):
        return model.adapt(model.gaussian_data(amp, t0))
    return make


def classical_sweep(d: int, p_grid, amplitude_grid, horizon: float, L: float, n: int, seed: int = 0,
                    t0: float = 1.0, settings: CellSettings = CellSettings(), workers=None):
    model = GridModel(d, L, n)
    return fujita_sweep(model, p_grid, amplitude_grid, horizon, seed=seed,
                        make_u0=classical_gaussian_data(t0), settings=settings, workers=workers)
