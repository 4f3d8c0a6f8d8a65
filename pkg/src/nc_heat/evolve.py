"""Mild solutions of ``du/dt = -Delta u + u^p``: steppers, Picard windows, certificates, sweeps.

The solvers are written against a small backend protocol so the matrix model
(:class:`MatrixModel`) and the classical grid model
(:class:`nc_heat.classical.GridModel`) share one code path.  A backend
provides ``heat(u, t)``, ``power(u, p)``, ``norm(u, q)``, ``sup(u)``,
``min_eig(u)``, ``trace(u)``, ``sup_heat(u, ts)`` and ``check(u)``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gamma

from .algebra import ModelConfig, adjoint, embed
from .doi import estimate_cp, matrix_power
from .errors import LeakageExceeded, NoAdmissibleQ, NotContracting, Overflow, BoxTooSmall
from .heat import gaussian_operator_diagonal, heat_apply, heat_generator, heat_origin_value
from .lp import lp_norm_positive

SCHEMES = {"etd1": 1, "midpoint": 2}


# --- matrix backend -------------------------------------------------------

class MatrixModel:
    """Matrix-model backend.

    Rotation-invariant data (diagonal in the Hermite basis) stays diagonal
    under the heat semigroup and under powers, so such states are stored as
    the diagonal vector only; general states are ``N x N`` matrices.
    """

    d = 2
    # operator convexity of x^p limits the certificate to this range
    certificate_p_max = 2.0

    def __init__(self, cfg: ModelConfig, method: str = "generator"):
        if cfg.c_tau is None:
            cfg = cfg.calibrated()
        self.cfg = cfg
        self.method = method

    def describe(self) -> dict:
        return {"model": "matrix2", "N": self.cfg.N, "N_pad": self.cfg.N_pad, "h": self.cfg.h,
                "method": self.method}

    def gaussian_data(self, amplitude: float, t0: float = 0.5, diagonal: bool = True):
        vec = amplitude * gaussian_operator_diagonal(t0, self.cfg.N, self.cfg.h)
        return vec if diagonal else np.diag(vec).astype(complex)

    def prepare(self, u):
        u = np.asarray(u)
        if u.ndim == 2 and not np.any(u - np.diag(np.diag(u))):
            return np.real(np.diag(u)).copy()
        return u

    def heat(self, u, t: float):
        if t == 0:
            return u
        cfg = self.cfg
        if u.ndim == 1 and self.method == "generator":
            gen = heat_generator(cfg.N_pad, cfg.h)
            padded = np.zeros(cfg.N_pad)
            padded[: u.size] = u
            y = gen.apply_band(0, padded, t)
            total = np.linalg.norm(y)
            leak = np.linalg.norm(y[u.size:]) / total if total > 0 else 0.0
            if leak > cfg.tol_leak:
                raise LeakageExceeded(f"heat step leaked {leak:.2e}", leak)
            return y[: u.size]
        if u.ndim == 1:
            return np.real(np.diag(heat_apply(cfg, t, np.diag(u), method=self.method)))
        return heat_apply(cfg, t, u, method=self.method)

    def power(self, u, p: float):
        if u.ndim == 1:
            return np.clip(u, 0.0, None) ** p
        return matrix_power(u, p)

    def norm(self, u, q: float) -> float:
        return lp_norm_positive(self.cfg, u, q)

    def sup(self, u) -> float:
        return lp_norm_positive(self.cfg, u, math.inf)

    def min_eig(self, u) -> float:
        if u.ndim == 1:
            return float(u.min())
        return float(np.linalg.eigvalsh(0.5 * (u + adjoint(u))).min())

    def trace(self, u) -> float:
        diag = u if u.ndim == 1 else np.real(np.diag(u))
        return float(self.cfg.tau_constant * np.sum(diag))

    def sup_heat(self, u, ts: Sequence[float]) -> np.ndarray:
        """Lower bounds on ``||exp(-t Delta) u||_inf``, exact at the vacuum for every ``t``.

        Where the truncated semigroup is leak-free its operator norm is used
        as well; the larger of the two is returned.
        """
        diag = u if u.ndim == 1 else np.real(np.diag(u))
        out = np.array([heat_origin_value(t, diag, self.cfg.h) for t in ts])
        for i, t in enumerate(ts):
            try:
                out[i] = max(out[i], self.sup(self.heat(u, t)))
            except LeakageExceeded:
                break
        return out

    def check(self, u) -> None:
        return None


# --- stepping -------------------------------------------------------------

@dataclass
class EvolutionState:
    """Solver state; ``history`` rows are ``(t, ||u||_q, ||u||_inf, monitor)``."""

    t: float
    u: object
    dt: float
    scheme: str = "midpoint"
    history: list = field(default_factory=list)

    def record(self, model, q: float, monitor=None) -> None:
        if self.history and self.t <= self.history[-1][0]:
            raise ValueError("history times must increase")
        self.history.append((self.t, model.norm(self.u, q), model.sup(self.u), monitor))


def duhamel_step(model, state: EvolutionState, dt: float, p: float, coef: float = 1.0,
                 ceiling: float = math.inf) -> EvolutionState:
    """One exponential step of the Duhamel formula.

    ``etd1``: ``H_dt(u + dt u^p)``.
    ``midpoint``: ``H_dt u + dt H_{dt/2}(v^p)`` with
    ``v = H_{dt/2} u + (dt/2)(H_{dt/2} u)^p``.

    Raises
    ------
    Overflow
        If the new sup norm reaches ``ceiling``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = state.u
    if state.scheme == "etd1":
        new = model.heat(u + (dt * coef) * model.power(u, p), dt)
    elif state.scheme == "midpoint":
        half = model.heat(u, 0.5 * dt)
        mid = half + (0.5 * dt * coef) * model.power(half, p)
        new = model.heat(half, 0.5 * dt) + (dt * coef) * model.heat(model.power(mid, p), 0.5 * dt)
    else:
        raise ValueError(f"unknown scheme {state.scheme!r}")
    model.check(new)
    top = model.sup(new)
    if not np.isfinite(top) or top >= ceiling:
        raise Overflow(f"sup norm {top:.3e} reached the ceiling", t=state.t + dt, value=top)
    return EvolutionState(t=state.t + dt, u=new, dt=dt, scheme=state.scheme, history=state.history)


@dataclass(frozen=True)
class StepPolicy:
    """Adaptive step: ``dt p coef ||u||^(p-1) <= eps`` and ``dt <= rel (t + t_scale)``."""

    eps: float = 0.02
    rel: float = 0.05
    t_scale: float = 1.0
    dt_max: float = math.inf
    dt_min: float = 1e-10

    def halved(self) -> "StepPolicy":
        return replace(self, eps=self.eps / 2, rel=self.rel / 2)

    def next_dt(self, t: float, sup: float, p: float, coef: float) -> float:
        dt = self.rel * (t + self.t_scale)
        stiff = p * abs(coef) * sup ** (p - 1.0)
        if stiff > 0:
            dt = min(dt, self.eps / stiff)
        return max(min(dt, self.dt_max), self.dt_min)


def duhamel_on_grid(model, u0, p: float, times: Sequence[float], scheme: str = "midpoint",
                    substeps: int = 1, coef: float = 1.0) -> list:
    """Integrate through the given times (with equal substeps) and return the states there."""
    state = EvolutionState(t=float(times[0]), u=u0, dt=0.0, scheme=scheme)
    out = [u0]
    for a, b in zip(times[:-1], times[1:]):
        h = (b - a) / substeps
        for _ in range(substeps):
            state = duhamel_step(model, state, h, p, coef)
        out.append(state.u)
    return out


# --- Picard window --------------------------------------------------------

@dataclass
class PicardResult:
    T_window: float
    times: np.ndarray
    trajectory: list
    differences: list
    ratios: list
    delta: float
    c_p: float
    contraction_bound: float


def _traj_distance(model, a: list, b: list, q: float) -> float:
    return max(model.norm(x - y, q) + model.sup(x - y) for x, y in zip(a, b))


def picard_window(model, u0, q: float, p: float, tol: float = 1e-8, horizon: Optional[float] = None,
                  n_steps: int = 64, max_iter: int = 60, c_p: Optional[float] = None) -> PicardResult:
    """Fixed point of the mild-solution map on the local-existence window.

    ``T = min(2^-p delta^(1-p) / c_p, horizon) / 2`` with
    ``delta = max(||u0||_q, ||u0||_inf)``.  The time integral is the
    trapezoid rule on a uniform grid, written recursively so each iterate
    costs ``n_steps`` heat applications.  The iteration distance is
    ``sup_t (||.||_q + ||.||_inf)``.

    Raises
    ------
    NotContracting
        If a successive-difference ratio exceeds 0.95.
    """
    if c_p is None:
        c_p = 1.0 if p == 2.0 else estimate_cp(p)
    delta = max(model.norm(u0, q), model.sup(u0))
    if delta == 0.0:
        T = 0.5 * (horizon if horizon is not None else 1.0)
    else:
        T = 2.0 ** (-p) * delta ** (1.0 - p) / c_p
        if horizon is not None:
            T = min(T, horizon)
        T *= 0.5
    times = np.linspace(0.0, T, n_steps + 1)
    dt = times[1]
    linear = [u0]
    for _ in range(n_steps):
        linear.append(model.heat(linear[-1], dt))
    current = list(linear)
    diffs, ratios = [], []
    for _ in range(max_iter):
        f = [model.power(x, p) for x in current]
        acc = 0.0 * u0
        new = [linear[0]]
        for i in range(1, n_steps + 1):
            acc = model.heat(acc + (0.5 * dt) * f[i - 1], dt) + (0.5 * dt) * f[i]
            new.append(linear[i] + acc)
        diff = _traj_distance(model, new, current, q)
        if diffs and diffs[-1] > 0:
            ratio = diff / diffs[-1]
            ratios.append(ratio)
            if ratio > 0.95:
                raise NotContracting(f"Picard ratio {ratio:.3f} on window {T:.4g}", ratio=ratio)
        diffs.append(diff)
        current = new
        if diff < tol:
            break
    bound = 2.0 ** p * c_p * delta ** (p - 1.0) * T
    return PicardResult(T_window=T, times=times, trajectory=current, differences=diffs,
                        ratios=ratios, delta=delta, c_p=c_p, contraction_bound=bound)


# --- blow-up certificates -------------------------------------------------

def certificate_threshold(p: float) -> float:
    """``(p - 1)^(-1/(p - 1))``."""
    return (p - 1.0) ** (-1.0 / (p - 1.0))


class Certificate(NamedTuple):
    margin: float
    violated_at: Optional[float]


def default_certificate_grid(t_max: float = 1e12, t_min: float = 1e-3, n: int = 241) -> np.ndarray:
    return np.geomspace(t_min, t_max, n)


def lemma61_certificate(model, u0, p: float, t_grid: Optional[Sequence[float]] = None) -> Certificate:
    """``max_t t^(1/(p-1)) ||exp(-t Delta) u0||_inf - (p-1)^(-1/(p-1))``.

    A positive margin at ``t`` rules out any nonnegative supersolution on
    ``[0, t]``; the norm values used are lower bounds, so the certificate is
    conservative.  Outside ``1 < p < 2`` the value is computed but carries no
    implication (the range is ``model.certificate_p_max``).
    """
    if not 1.0 < p < getattr(model, "certificate_p_max", 2.0):
        warnings.warn(f"p={p} is outside (1, 2); certificate is advisory", stacklevel=2)
    ts = default_certificate_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    sups = model.sup_heat(u0, ts)
    vals = ts ** (1.0 / (p - 1.0)) * sups - certificate_threshold(p)
    k = int(np.argmax(vals))
    pos = np.nonzero(vals > 0)[0]
    return Certificate(float(vals[k]), float(ts[pos[0]]) if pos.size else None)


@dataclass
class Corollary62Result:
    s1: np.ndarray
    t_grid: np.ndarray
    margins: np.ndarray

    @property
    def max_margin(self) -> float:
        return float(self.margins.max()) if self.margins.size else -math.inf

    def first_positive(self):
        """Earliest ``(s1, t)`` with a positive margin, or ``None``."""
        for i, row in enumerate(self.margins):
            pos = np.nonzero(row > 0)[0]
            if pos.size:
                return float(self.s1[i]), float(self.t_grid[pos[0]])
        return None


def corollary62_monitor(model, trajectory: Sequence, p: float,
                        t_grid: Optional[Sequence[float]] = None) -> Corollary62Result:
    """Certificate margins with ``u0`` replaced by ``u(s1)`` along a trajectory.

    ``trajectory`` is a sequence of ``(s1, u(s1))`` pairs.  A positive margin
    at ``(s1, t)`` shows the solution cannot exist past ``s1 + t``.
    """
    ts = default_certificate_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    thr = certificate_threshold(p)
    s1 = np.array([s for s, _ in trajectory], dtype=float)
    margins = np.empty((len(trajectory), ts.size))
    for i, (_, u) in enumerate(trajectory):
        margins[i] = ts ** (1.0 / (p - 1.0)) * model.sup_heat(u, ts) - thr
    return Corollary62Result(s1=s1, t_grid=ts, margins=margins)


# --- Fujita parameter algebra ---------------------------------------------

@dataclass(frozen=True)
class FujitaParams:
    d: int
    p: float
    p_F: float
    r: float
    q: float
    beta: float
    C_beta: float
    gamma_factor: float
    M_max: Optional[float] = None
    alpha: Optional[float] = None


def admissible_interval(d: int, p: float):
    """Open interval of ``y = d/(2q)`` giving ``0 < p beta < 1``, ``r <= q`` and ``q > p``."""
    lo = 1.0 / (p * (p - 1.0))
    hi = min(1.0 / (p - 1.0), d / (2.0 * p))
    return lo, hi


def smallness_max(alpha: float, K: float, p: float, iters: int = 200) -> Optional[float]:
    """Largest ``M`` with ``alpha + K M^p <= M`` by bisection (``None`` if none exists)."""
    m_star = (1.0 / (p * K)) ** (1.0 / (p - 1.0))
    if m_star - alpha - K * m_star**p < 0:
        return None
    lo, hi = m_star, (1.0 / K) ** (1.0 / (p - 1.0))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid - alpha - K * mid**p >= 0:
            lo = mid
        else:
            hi = mid
    return float(lo)


def fujita_params(d: int, p: float, alpha: Optional[float] = None) -> FujitaParams:
    """Exponents for small-data global existence above the Fujita exponent.

    ``q`` is the midpoint (in ``d/(2q)``) of the admissible interval.

    Raises
    ------
    NoAdmissibleQ
        If ``p <= 1 + 2/d`` or the admissible interval is empty.
    """
    p_F = 1.0 + 2.0 / d
    if not p > p_F:
        raise NoAdmissibleQ(f"p={p} does not exceed the Fujita exponent {p_F}")
    lo, hi = admissible_interval(d, p)
    if not lo < hi:
        raise NoAdmissibleQ(f"empty admissible interval ({lo}, {hi})")
    q = d / (lo + hi)
    r = d * (p - 1.0) / 2.0
    beta = 1.0 / (p - 1.0) - d / (2.0 * q)
    if not (0 < p * beta < 1 and q > p and r <= q):
        raise NoAdmissibleQ(f"exponent invariants fail for d={d}, p={p}")
    s = d * (p - 1.0) / (2.0 * q)
    C_beta = (4.0 * math.pi) ** (-s)
    gfac = gamma((p - 1.0) * beta) * gamma(1.0 - p * beta) / gamma(1.0 - beta)
    m_max = None if alpha is None else smallness_max(alpha, C_beta * gfac, p)
    return FujitaParams(d=d, p=p, p_F=p_F, r=r, q=q, beta=beta, C_beta=C_beta,
                        gamma_factor=float(gfac), M_max=m_max, alpha=alpha)


# --- classification -------------------------------------------------------

OUTCOMES = ("blow-up", "global-candidate", "undecided")
MATRIX_COLUMNS = ("p", "amplitude", "outcome", "t_detect", "max_uinf", "lemma61_margin",
                  "beta", "q", "r", "decay_fit", "dt_final", "cell_seed")
CLASSICAL_COLUMNS = MATRIX_COLUMNS + ("d", "L", "n")


@dataclass
class SweepRecord:
    p: float
    amplitude: float
    outcome: str
    t_detect: float
    max_uinf: float
    lemma61_margin: float
    beta: float
    q: float
    r: float
    decay_fit: float
    dt_final: float
    cell_seed: int
    d: Optional[int] = None
    L: Optional[float] = None
    n: Optional[int] = None
    note: str = field(default="", compare=False)

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if self.outcome == "blow-up" and not math.isfinite(self.t_detect):
            raise ValueError("blow-up needs a finite detection time")


@dataclass(frozen=True)
class CellSettings:
    """Classification thresholds for one sweep cell."""

    scheme: str = "midpoint"
    policy: StepPolicy = StepPolicy()
    ceiling_factor: float = 1e6
    cert_grid: tuple = (1e-3, 1e12, 241)
    monitor_every: int = 10
    decay_tol: float = 1e-9
    q_fallback: float = 2.0
    use_certificate: bool = True


def decay_exponent(times, values, window: float = 10.0) -> float:
    """Least-squares ``-d log v / d log t`` over the last ``window`` factor of ``t``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (t >= t[-1] / window) & (t > 0) & (v > 0)
    if sel.sum() < 3:
        return math.nan
    slope = np.polyfit(np.log(t[sel]), np.log(v[sel]), 1)[0]
    return float(-slope)


def cell_seed(seed: int, i: int, j: int) -> int:
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])


def classify_cell(model, u0, p: float, horizon: float, amplitude: float = math.nan,
                  settings: CellSettings = CellSettings(), seed: int = 0, coef: float = 1.0,
                  keep_trajectory: bool = False):
    """Run one cell to ``horizon`` and label it.

    blow-up: the sup norm reaches ``ceiling_factor * ||u0||_inf``, or (for
    ``1 < p < model.certificate_p_max``) a certificate margin turns positive
    at some sampled ``s1``.  global-candidate: the horizon is reached and
    ``t^beta ||u(t)||_q`` is non-increasing over the last decade (only
    defined above the Fujita exponent).  Anything else is undecided.
    """
    d = model.d
    try:
        fp = fujita_params(d, p)
        q, beta, r = fp.q, fp.beta, fp.r
    except NoAdmissibleQ:
        fp = None
        q, beta, r = settings.q_fallback, math.nan, d * (p - 1.0) / 2.0
    use_cert = (settings.use_certificate and coef > 0
                and 1.0 < p < getattr(model, "certificate_p_max", 2.0))
    cert_ts = default_certificate_grid(settings.cert_grid[1], settings.cert_grid[0],
                                       int(settings.cert_grid[2]))
    u0 = model.prepare(u0) if hasattr(model, "prepare") else u0
    sup0 = model.sup(u0)
    ceiling = settings.ceiling_factor * sup0
    if use_cert:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lemma = lemma61_certificate(model, u0, p, cert_ts).margin
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lemma = lemma61_certificate(model, u0, p, cert_ts).margin if p > 1 else math.nan

    state = EvolutionState(t=0.0, u=u0, dt=0.0, scheme=settings.scheme)
    state.record(model, q)
    traj = [(0.0, u0)] if keep_trajectory else None
    outcome, t_detect, note = "undecided", math.nan, ""
    max_uinf = sup0
    if use_cert and lemma > 0:
        outcome, t_detect, note = "blow-up", 0.0, "certificate at s1=0"
    steps = 0
    while outcome == "undecided" and state.t < horizon * (1 - 1e-12):
        dt = settings.policy.next_dt(state.t, model.sup(state.u), p, coef)
        dt = min(dt, horizon - state.t)
        try:
            state = duhamel_step(model, state, dt, p, coef, ceiling)
        except Overflow as exc:
            outcome, t_detect, note = "blow-up", float(exc.t), "ceiling"
            max_uinf = max(max_uinf, float(exc.value))
            break
        except (LeakageExceeded, BoxTooSmall) as exc:
            note = f"{type(exc).__name__}: {exc}"
            break
        if hasattr(model, "adapt"):
            state.u = model.adapt(state.u)
        state.record(model, q)
        max_uinf = max(max_uinf, state.history[-1][2])
        steps += 1
        if keep_trajectory:
            traj.append((state.t, state.u))
        if use_cert and steps % settings.monitor_every == 0:
            mon = corollary62_monitor(model, [(state.t, state.u)], p, cert_ts)
            if mon.max_margin > 0:
                outcome, t_detect, note = "blow-up", state.t, "certificate"
    hist = np.array([(h[0], h[1]) for h in state.history])
    decay = math.nan
    if outcome == "undecided" and not note and state.t >= horizon * (1 - 1e-12):
        decay = decay_exponent(hist[:, 0], hist[:, 1])
        if fp is None:
            note = "horizon reached below the Fujita exponent"
        else:
            sel = hist[:, 0] >= hist[-1, 0] / 10.0
            weighted = hist[sel, 0] ** beta * hist[sel, 1]
            if np.all(np.diff(weighted) <= settings.decay_tol * weighted[:-1]):
                outcome = "global-candidate"
            else:
                note = "t^beta ||u||_q still increasing"
    elif hist.shape[0] >= 3:
        decay = decay_exponent(hist[:, 0], hist[:, 1])
    extra = {}
    if hasattr(model, "grid_info"):
        extra = model.grid_info(state.u)
    rec = SweepRecord(p=float(p), amplitude=float(amplitude), outcome=outcome,
                      t_detect=float(t_detect), max_uinf=float(max_uinf),
                      lemma61_margin=float(lemma), beta=float(beta), q=float(q), r=float(r),
                      decay_fit=float(decay), dt_final=float(state.dt), cell_seed=int(seed),
                      note=note, **extra)
    if keep_trajectory:
        return rec, state, traj
    return rec


# --- sweep ----------------------------------------------------------------

def worker_count() -> int:
    """Worker cap from ``NC_HEAT_THREADS`` (0 means all cores; default 1)."""
    raw = os.environ.get("NC_HEAT_THREADS", "1")
    n = int(raw)
    return (os.cpu_count() or 1) if n == 0 else max(1, n)


def _run_cell(args):
    model, make_u0, p, amp, horizon, settings, seed = args
    try:
        return classify_cell(model, make_u0(model, amp), p, horizon, amplitude=amp,
                             settings=settings, seed=seed)
    except Exception as exc:  # per-cell failure is data, not a crash
        fp_r = model.d * (p - 1.0) / 2.0
        return SweepRecord(p=float(p), amplitude=float(amp), outcome="undecided", t_detect=math.nan,
                           max_uinf=math.nan, lemma61_margin=math.nan, beta=math.nan, q=math.nan,
                           r=fp_r, decay_fit=math.nan, dt_final=math.nan, cell_seed=seed,
                           note=f"{type(exc).__name__}: {exc}")


def matrix_gaussian_data(t0: float = 0.5):
    def make(model, amp):
        return model.gaussian_data(amp, t0)
    return make


def fujita_sweep(model, p_grid: Sequence[float], amplitude_grid: Sequence[float], horizon: float,
                 seed: int = 0, make_u0: Optional[Callable] = None,
                 settings: CellSettings = CellSettings(), workers: Optional[int] = None) -> List[SweepRecord]:
    """Classify every ``(p, amplitude)`` cell; records sorted by ``(p, amplitude)``."""
    make_u0 = make_u0 or matrix_gaussian_data()
    jobs = []
    for i, p in enumerate(p_grid):
        for j, a in enumerate(amplitude_grid):
            jobs.append((model, make_u0, float(p), float(a), horizon, settings, cell_seed(seed, i, j)))
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, jobs))
    else:
        records = [_run_cell(job) for job in jobs]
    return sorted(records, key=lambda r: (r.p, r.amplitude))


def boundary_bracket(records: Sequence[SweepRecord]):
    """``[p_lo, p_hi]`` at the smallest amplitude.

    ``p_hi`` is the smallest ``p`` labelled global-candidate and ``p_lo``
    the largest ``p`` below it labelled blow-up; either may be ``None``.
    """
    if not records:
        return None, None
    amin = min(r.amplitude for r in records)
    cells = sorted((r for r in records if r.amplitude == amin), key=lambda r: r.p)
    glob = [r.p for r in cells if r.outcome == "global-candidate"]
    p_hi = min(glob) if glob else None
    blow = [r.p for r in cells if r.outcome == "blow-up" and (p_hi is None or r.p < p_hi)]
    p_lo = max(blow) if blow else None
    return p_lo, p_hi


# --- CSV ------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def records_to_csv(records: Sequence[SweepRecord], classical: bool = False) -> str:
    cols = CLASSICAL_COLUMNS if classical else MATRIX_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def records_from_csv(text: str) -> List[SweepRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    ints = {"cell_seed", "d", "n"}
    for row in rows:
        kw = {}
        for k, v in row.items():
            if k == "outcome":
                kw[k] = v
            elif v == "":
                kw[k] = None
            elif k in ints:
                kw[k] = int(v)
            else:
                kw[k] = float(v)
        out.append(SweepRecord(**kw))
    return out
