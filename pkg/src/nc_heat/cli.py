"""Batch front-end: ``nc-heat <subcommand> [config] [--set key=value ...]``.

Configuration is a flat text file of ``key = value`` lines (``#`` starts a
comment).  Every key is typed; unknown keys are rejected.  Each run writes
its outputs and a ``manifest.json`` into ``<output_dir>/<subcommand>/``.

Exit codes: 0 success, 2 invariant violation, 3 infrastructure error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import BoundViolated, CalibrationUnstable, JensenViolated, NcHeatError

EXIT_OK, EXIT_VIOLATION, EXIT_INFRA = 0, 2, 3


# --- configuration --------------------------------------------------------

def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(math.inf if v.strip() in ("inf", "infinity") else float(v) for v in text.split(","))


@dataclass
class Config:
    # model
    N: int = 48
    N_pad: int = 0                 # 0 means 2 N
    h: float = 1.0
    quad_order: int = 20
    tol_leak: float = 1e-6
    calibration_rtol: float = 0.01
    seed: int = 0
    output_dir: str = "results"
    # verify-doi
    doi_p: tuple = (1.5, 2.0, 3.0, 4.0)
    doi_q: tuple = (1.0, 2.0, 3.0, math.inf)
    doi_trials: int = 100
    doi_dim: int = 8
    doi_corrupt: bool = False      # negative control: phi diagonal replaced by 10 p
    cp_extent: float = 80.0
    cp_points: int = 16384
    cp_rtol: float = 0.005
    # heat-check
    heat_times: tuple = (0.5, 1.0, 2.0)
    trace_rtol: float = 0.01
    positivity_tol: float = 1e-10
    semigroup_tol: float = 1e-4
    contraction_slack: float = 1e-8
    kernel_tol: float = 1e-6
    tauberian_slack: float = 0.05
    heat_method: str = "generator"
    # jensen-check
    jensen_trials: int = 200
    jensen_dim: int = 4
    jensen_p_min: float = 1.0
    jensen_p_max: float = 2.0
    jensen_heat_times: tuple = (0.1, 0.5, 1.0)
    jensen_tol: float = 1e-8
    counterexample_p: float = 3.0
    counterexample_trials: int = 2000
    counterexample_threshold: float = -1e-4
    # fujita-sweep / certify
    model: str = "matrix2"
    p_grid: tuple = (1.5, 1.75, 2.0, 2.25, 2.5, 3.0, 3.5, 4.0)
    amplitudes: tuple = (0.01, 0.1)
    horizon: float = 0.0           # 0: 50 (matrix2) or 1e4 (classical)
    t0: float = 0.0                # 0: 0.5 (matrix2) or 1.0 (classical)
    sweep_N: int = 1600
    L: float = 0.0                 # 0: 40 (d=1), 20 (d=2), 10 (d=3)
    n: int = 0                     # 0: 1024 (d=1), 128 (d=2), 64 (d=3)
    box_tol: float = 1e-8
    scheme: str = "midpoint"
    step_eps: float = 0.02
    step_rel: float = 0.05
    ceiling_factor: float = 1e6
    cert_t_min: float = 1e-3
    cert_t_max: float = 1e12
    cert_points: int = 241
    p: float = 1.5
    amplitude: float = 0.01

    def snapshot(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = [repr(x) if isinstance(x, float) and not math.isfinite(x) else x for x in v] \
                if isinstance(v, tuple) else v
        return out


_TYPES = {f.name: f.type for f in fields(Config)}


class ConfigError(NcHeatError):
    pass


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "tuple":
            return _floats(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str, base: Optional[Config] = None) -> Config:
    """Parse ``key = value`` lines onto ``base`` (or the defaults).

    Raises
    ------
    ConfigError
        On a malformed line, an unknown key, or a value of the wrong type.
    """
    cfg = dataclasses.replace(base) if base is not None else Config()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(cfg, key, _coerce(key, value))
    return cfg


def load_config(path: Optional[str], overrides: List[str] = ()) -> Config:
    text = Path(path).read_text(encoding="utf-8") if path else ""
    return parse_config("\n".join([text, *overrides]))


# --- manifest -------------------------------------------------------------

@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    version: str
    started: str
    finished: str = ""
    passed: int = 0
    failed: int = 0
    outputs: dict = field(default_factory=dict)
    exit_code: int = 0

    def add_output(self, path: Path, text: str) -> None:
        path.write_text(text, encoding="utf-8")
        self.outputs[path.name] = {"path": str(path), "sha256": hashlib.sha256(text.encode()).hexdigest()}

    def write(self, directory: Path) -> Path:
        self.finished = _now()
        path = directory / "manifest.json"
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, default=str) + "\n", encoding="utf-8")
        return path


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _start(cfg: Config, sub: str):
    out = Path(cfg.output_dir) / sub
    out.mkdir(parents=True, exist_ok=True)
    return out, RunManifest(subcommand=sub, config=cfg.snapshot(), seed=cfg.seed, version=__version__,
                            started=_now())


def _model_cfg(cfg: Config, N: Optional[int] = None):
    from .algebra import model_config

    n = cfg.N if N is None else N
    pad = cfg.N_pad if (N is None and cfg.N_pad) else 2 * n
    return model_config(N=n, N_pad=pad, h=cfg.h, quad_order=cfg.quad_order, tol_leak=cfg.tol_leak,
                        calibrate=False)


class Checks:
    """Named pass/fail lines with measured values."""

    def __init__(self):
        self.lines = []
        self.passed = self.failed = 0

    def add(self, name: str, ok: bool, detail: str) -> None:
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if ok:
            self.passed += 1
        else:
            self.failed += 1

    def text(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")


# --- subcommands ----------------------------------------------------------

def cmd_verify_doi(cfg: Config) -> int:
    from .doi import PhiKernel, estimate_cp, verify_nonlinearity

    out, man = _start(cfg, "verify-doi")
    checks = Checks()
    rows = ["p,q,trials,dim,c_p,max_theorem_ratio,max_corollary_ratio,max_absolute_ratio"]
    code = EXIT_OK
    for p in cfg.doi_p if cfg.doi_trials > 0 else ():
        c_p = 1.0 if p == 2.0 else estimate_cp(p, extent=cfg.cp_extent, n=cfg.cp_points, rtol=cfg.cp_rtol)
        kernel = PhiKernel(p, diagonal_override=10.0 * p) if cfg.doi_corrupt else None
        for q in cfg.doi_q:
            try:
                rep = verify_nonlinearity(p, q, cfg.doi_trials, cfg.doi_dim, cfg.seed, kernel=kernel, c_p=c_p)
            except BoundViolated as exc:
                path = out / f"counterexample_p{p:g}_q{q:g}.txt"
                man.add_output(path, exc.record)
                checks.add(f"bound p={p:g} q={q:g}", False, f"{exc} (record: {path})")
                code = EXIT_VIOLATION
                continue
            rows.append(f"{p!r},{q!r},{rep.trials},{rep.dim},{rep.c_p!r},{rep.max_theorem_ratio!r},"
                        f"{rep.max_corollary_ratio!r},{rep.max_absolute_ratio!r}")
            checks.add(f"bound p={p:g} q={q:g}", True,
                       f"c_p={rep.c_p:.6f} theorem={rep.max_theorem_ratio:.4f} corollary={rep.max_corollary_ratio:.4f}")
    man.add_output(out / "doi_ratios.csv", "\n".join(rows) + "\n")
    man.add_output(out / "report.txt", checks.text())
    return _finish(man, out, checks, code)


def _finish(man: RunManifest, out: Path, checks: Checks, code: int) -> int:
    man.passed, man.failed = checks.passed, checks.failed
    if code == EXIT_OK and checks.failed:
        code = EXIT_VIOLATION
    man.exit_code = code
    man.write(out)
    sys.stdout.write(checks.text())
    return code


def cmd_heat_check(cfg: Config) -> int:
    from .algebra import calibrate_trace, is_positive
    from .convexity import heat_cp_map, jensen_gap, random_unital_cp
    from .doi import random_positive
    from .heat import (gaussian_kernel_form, gaussian_operator, gaussian_operator_exact, heat_apply,
                       tauberian_functional)
    from .lp import lp_norm
    from ._hermite import gauss_hermite, hermite_functions

    out, man = _start(cfg, "heat-check")
    checks = Checks()
    mcfg = _model_cfg(cfg)
    try:
        c_tau = calibrate_trace(mcfg, rtol=cfg.calibration_rtol)
        checks.add("calibration", True, f"c_tau={c_tau:.10f}")
    except CalibrationUnstable as exc:
        checks.add("calibration", False, str(exc))
        man.add_output(out / "report.txt", checks.text())
        return _finish(man, out, checks, EXIT_VIOLATION)
    mcfg = dataclasses.replace(mcfg, c_tau=c_tau)
    times = [t for t in cfg.heat_times if t > 0]
    gauss = {}
    for t in times:
        G = gaussian_operator(mcfg, t)
        gauss[t] = G
        tr = c_tau * np.trace(G).real
        checks.add(f"trace t={t:g}", abs(tr - 1) <= cfg.trace_rtol, f"tau(G)={tr:.6f}")
        lam = np.linalg.eigvalsh(G).min()
        checks.add(f"positivity t={t:g}", lam >= -cfg.positivity_tol, f"min eig={lam:.3e}")
    if times:
        s = t = times[0]
        lhs = heat_apply(mcfg, t, gaussian_operator_exact(s, mcfg.N, mcfg.h), method=cfg.heat_method)
        ref = gaussian_operator_exact(s + t, mcfg.N, mcfg.h)
        err = np.linalg.norm(lhs - ref) / np.linalg.norm(ref)
        checks.add(f"semigroup s=t={t:g}", err <= cfg.semigroup_tol, f"relative error={err:.3e}")
        rng = np.random.default_rng(cfg.seed)
        u = np.zeros((mcfg.N, mcfg.N), complex)
        k = min(8, mcfg.N)
        u[:k, :k] = random_positive(k, rng)
        hu = heat_apply(mcfg, t, u, method=cfg.heat_method)
        worst = max(lp_norm(mcfg, hu, r) - lp_norm(mcfg, u, r) for r in (1.0, 2.0, 4.0, math.inf))
        checks.add("contraction", worst <= cfg.contraction_slack * lp_norm(mcfg, u, 1.0),
                   f"max(||Hu||_r - ||u||_r)={worst:.3e}")
        worst = max(lp_norm(mcfg, hu, math.inf) - (4 * math.pi * t) ** (-1.0 / r) * lp_norm(mcfg, u, r)
                    for r in (1.0, 2.0, 4.0))
        checks.add("smoothing", worst <= cfg.contraction_slack * lp_norm(mcfg, u, 1.0),
                   f"max(||Hu||_inf - (4 pi t)^(-1/r)||u||_r)={worst:.3e}")
        x, w = gauss_hermite(80)
        w = w * np.exp(x**2)
        basis = hermite_functions(min(6, mcfg.N), x)
        Gt = gauss[t]
        err = max(abs(gaussian_kernel_form(t, basis[a], basis[b], x, w, mcfg.h) - Gt[a, b])
                  for a in range(basis.shape[0]) for b in range(basis.shape[0]))
        checks.add("kernel", err <= cfg.kernel_tol, f"max entry error={err:.3e}")
        gaps = []
        for tt in cfg.jensen_heat_times:
            phi = heat_cp_map(mcfg, tt)
            for j, p in enumerate((1.25, 1.5, 1.75, 2.0)):
                v = np.zeros((mcfg.N, mcfg.N), complex)
                v[:k, :k] = random_positive(k, np.random.default_rng([cfg.seed, j]))
                gaps.append(jensen_gap(phi, v, p, check=False))
        checks.add("jensen heat channels", min(gaps) >= -cfg.jensen_tol, f"min gap={min(gaps):.3e}")
        Gexact = gaussian_operator_exact(1.0, mcfg.N, mcfg.h)
        rep = tauberian_functional(mcfg, Gexact)
        l1 = lp_norm(mcfg, Gexact, 1.0)
        checks.add("tauberian", l1 <= rep.extrapolated * (1 + cfg.tauberian_slack),
                   f"||u||_1={l1:.6f} functional={rep.value:.6f} extrapolated={rep.extrapolated:.6f}")
    man.add_output(out / "report.txt", checks.text())
    return _finish(man, out, checks, EXIT_OK)


def cmd_jensen_check(cfg: Config) -> int:
    from .convexity import (heat_cp_map, jensen_gap, random_unital_cp, search_jensen_counterexample,
                            serialize_jensen)
    from .doi import random_positive

    out, man = _start(cfg, "jensen-check")
    checks = Checks()
    rng = np.random.default_rng(cfg.seed)
    worst = math.inf
    for k in range(cfg.jensen_trials):
        sub = np.random.default_rng([cfg.seed, k])
        phi = random_unital_cp(cfg.jensen_dim, int(sub.integers(1, 4)), int(sub.integers(2**31)))
        u = random_positive(cfg.jensen_dim, sub)
        p = float(sub.uniform(cfg.jensen_p_min, cfg.jensen_p_max))
        scale = np.linalg.eigvalsh(u).max() ** p
        worst = min(worst, jensen_gap(phi, u, p, check=False) / scale)
    if cfg.jensen_trials:
        checks.add("random unital CP", worst >= -cfg.jensen_tol, f"min scaled gap={worst:.3e}")
    if cfg.jensen_heat_times:
        mcfg = dataclasses.replace(_model_cfg(cfg), c_tau=2 * math.pi * cfg.h)
        hw = math.inf
        for t in cfg.jensen_heat_times:
            phi = heat_cp_map(mcfg, t)
            u = np.zeros((mcfg.N, mcfg.N), complex)
            u[:8, :8] = random_positive(8, rng)
            for p in (1.0, 1.5, 2.0):
                hw = min(hw, jensen_gap(phi, u, p, check=False) / np.linalg.eigvalsh(u).max() ** p)
        checks.add("heat channels", hw >= -cfg.jensen_tol, f"min scaled gap={hw:.3e}")
    gap, phi, u, trial = search_jensen_counterexample(cfg.counterexample_p, cfg.jensen_dim,
                                                      cfg.counterexample_trials, cfg.seed,
                                                      cfg.counterexample_threshold)
    found = gap < cfg.counterexample_threshold
    if phi is not None:
        man.add_output(out / "counterexample.txt", serialize_jensen(phi, u, cfg.counterexample_p, cfg.seed))
    checks.add(f"counterexample p={cfg.counterexample_p:g}", found, f"gap={gap:.3e} at trial {trial}")
    man.add_output(out / "report.txt", checks.text())
    return _finish(man, out, checks, EXIT_OK)


def _sweep_model(cfg: Config):
    """Backend, initial-data factory, horizon and whether the CSV has grid columns."""
    from .classical import GridModel, classical_gaussian_data
    from .evolve import MatrixModel, matrix_gaussian_data

    if cfg.model == "matrix2":
        from .algebra import model_config

        mcfg = model_config(N=cfg.sweep_N, N_pad=2 * cfg.sweep_N, h=cfg.h, tol_leak=cfg.tol_leak)
        return (MatrixModel(mcfg), matrix_gaussian_data(cfg.t0 or 0.5), cfg.horizon or 50.0, False)
    if cfg.model.startswith("classical-d") and cfg.model[-1] in "123":
        d = int(cfg.model[-1])
        L = cfg.L or {1: 40.0, 2: 20.0, 3: 10.0}[d]
        n = cfg.n or {1: 1024, 2: 128, 3: 64}[d]
        return (GridModel(d, L, n, box_tol=cfg.box_tol), classical_gaussian_data(cfg.t0 or 1.0),
                cfg.horizon or 1e4, True)
    raise ConfigError(f"unknown model {cfg.model!r}")


def _cell_settings(cfg: Config):
    from .evolve import CellSettings, StepPolicy

    return CellSettings(scheme=cfg.scheme, policy=StepPolicy(eps=cfg.step_eps, rel=cfg.step_rel),
                        ceiling_factor=cfg.ceiling_factor,
                        cert_grid=(cfg.cert_t_min, cfg.cert_t_max, cfg.cert_points))


def cmd_fujita_sweep(cfg: Config) -> int:
    from .evolve import boundary_bracket, fujita_sweep, records_to_csv

    out, man = _start(cfg, "fujita-sweep")
    model, make_u0, horizon, classical = _sweep_model(cfg)
    records = fujita_sweep(model, cfg.p_grid, cfg.amplitudes, horizon, seed=cfg.seed, make_u0=make_u0,
                           settings=_cell_settings(cfg))
    man.add_output(out / "sweep.csv", records_to_csv(records, classical=classical))
    lo, hi = boundary_bracket(records)
    summary = [f"model = {cfg.model}", f"horizon = {horizon!r}", f"bracket_low = {lo}", f"bracket_high = {hi}"]
    for r in records:
        if r.note:
            summary.append(f"note p={r.p!r} amplitude={r.amplitude!r}: {r.note}")
    man.add_output(out / "summary.txt", "\n".join(summary) + "\n")
    checks = Checks()
    sys.stdout.write("\n".join(summary[:4]) + "\n")
    return _finish(man, out, checks, EXIT_OK)


def cmd_certify(cfg: Config) -> int:
    from .evolve import (EvolutionState, corollary62_monitor, default_certificate_grid, duhamel_step,
                         lemma61_certificate)

    out, man = _start(cfg, "certify")
    model, make_u0, horizon, _ = _sweep_model(cfg)
    u0 = make_u0(model, cfg.amplitude)
    ts = default_certificate_grid(cfg.cert_t_max, cfg.cert_t_min, cfg.cert_points)
    cert = lemma61_certificate(model, u0, cfg.p, ts)
    settings = _cell_settings(cfg)
    state = EvolutionState(t=0.0, u=u0, dt=0.0, scheme=cfg.scheme)
    rows = ["s1,max_margin"]
    traj = [(0.0, u0)]
    while state.t < horizon and len(traj) < 200:
        dt = min(settings.policy.next_dt(state.t, model.sup(state.u), cfg.p, 1.0), horizon - state.t)
        try:
            state = duhamel_step(model, state, dt, cfg.p, ceiling=cfg.ceiling_factor * model.sup(u0))
        except NcHeatError:
            break
        if hasattr(model, "adapt"):
            state.u = model.adapt(state.u)
        traj.append((state.t, state.u))
    mon = corollary62_monitor(model, traj[:: max(1, len(traj) // 20)], cfg.p, ts)
    for s1, row in zip(mon.s1, mon.margins):
        rows.append(f"{float(s1)!r},{float(row.max())!r}")
    man.add_output(out / "margins.csv", "\n".join(rows) + "\n")
    violated = None if cert.violated_at is None else float(cert.violated_at)
    text = (f"lemma_margin = {float(cert.margin)!r}\nlemma_violated_at = {violated}\n"
            f"monitor_max_margin = {float(mon.max_margin)!r}\nmonitor_first_positive = {mon.first_positive()}\n")
    man.add_output(out / "report.txt", text)
    sys.stdout.write(text)
    return _finish(man, out, Checks(), EXIT_OK)


COMMANDS = {
    "verify-doi": cmd_verify_doi,
    "heat-check": cmd_heat_check,
    "jensen-check": cmd_jensen_check,
    "fujita-sweep": cmd_fujita_sweep,
    "certify": cmd_certify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="nc-heat", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", nargs="?", help="key = value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        return COMMANDS[args.command](cfg)
    except (BoundViolated, JensenViolated) as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return EXIT_VIOLATION
    except (NcHeatError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
