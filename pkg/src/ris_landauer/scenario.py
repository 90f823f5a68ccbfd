"""Scenario configuration, qubit model assembly, verification suites and sweeps."""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from . import adiabatic, channel, models, perturbation, simulate
from .errors import ConfigError, RISError
from .linalg import as_operator, is_hermitian, kron, trace_norm
from .quantum import check_density_matrix, gibbs_state

log = logging.getLogger(__name__)

OUT_DIR_ENV = "RIS_OUT_DIR"

_number = {"type": "number"}
_matrix = {
    "type": "array",
    "items": {"type": "array", "items": {"oneOf": [_number, {"type": "array", "items": _number,
                                                             "minItems": 2, "maxItems": 2}]}},
}
_schedule = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "a"],
         "properties": {"kind": {"const": "affine"}, "a": _number, "b": _number}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "s", "values"],
         "properties": {"kind": {"const": "tabulated"},
                        "s": {"type": "array", "items": _number, "minItems": 2},
                        "values": {"type": "array", "items": _number, "minItems": 2}}},
    ]
}

SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "lambda", "tau", "T_list"],
    "properties": {
        "name": {"type": "string"},
        "model": {"enum": ["qubit_rw", "qubit_fd", "custom"]},
        "E": _number,
        "E0": _number,
        "u1": _number,
        "beta_schedule": _schedule,
        "E0_schedule": _schedule,
        "lambda": _number,
        "lambda_list": {"type": "array", "items": _number, "minItems": 1},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "T_list": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "m": {"oneOf": [{"type": "integer", "minimum": 1},
                        {"type": "string", "pattern": r"^auto(\(\s*[0-9.eE+-]+\s*\))?$"}]},
        "rho_i": {"oneOf": [
            {"const": "invariant"},
            {"type": "object", "additionalProperties": False, "required": ["gibbs"],
             "properties": {"gibbs": _number}},
            {"type": "object", "additionalProperties": False, "required": ["matrix"],
             "properties": {"matrix": _matrix}},
        ]},
        "custom": {"type": "object", "additionalProperties": False, "required": ["h_S", "h_E", "v"],
                   "properties": {"h_S": _matrix, "h_E": _matrix, "v": _matrix}},
        "seed": {"type": "integer"},
        "outputs": {"type": "object", "additionalProperties": False,
                    "properties": {"dir": {"type": "string"}, "svg": {"type": "boolean"},
                                   "ledgers": {"type": "boolean"}}},
    },
}

DEFAULTS = {"E": 1.0, "E0": 0.8, "u1": 1.0, "beta_schedule": {"kind": "affine", "a": 1.0, "b": 0.0},
            "m": 1, "rho_i": "invariant", "seed": 0, "outputs": {}}


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(x[0], x[1]) if isinstance(x, list) else complex(x) for x in r] for r in rows])


def _sampler(spec: dict) -> Callable[[float], float]:
    if spec["kind"] == "affine":
        a, b = float(spec["a"]), float(spec.get("b", 0.0))
        return lambda s: a + b * s
    s = np.asarray(spec["s"], dtype=float)
    y = np.asarray(spec["values"], dtype=float)
    if len(s) != len(y):
        raise ConfigError("tabulated schedule needs equally many s and values")
    if np.any(np.diff(s) <= 0) or s[0] > 0 or s[-1] < 1:
        raise ConfigError("tabulated s must increase strictly and cover [0, 1]")
    spline = CubicSpline(s, y)
    return lambda x: float(spline(x))


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; ``raw`` keeps the JSON form (defaults filled in)."""

    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {exc.message}") from None
        raw = {**copy.deepcopy(DEFAULTS), **copy.deepcopy(data)}
        if raw["model"] == "custom" and "custom" not in raw:
            raise ConfigError("model 'custom' needs a 'custom' block with h_S, h_E and v")
        cfg = cls(raw)
        cfg.G  # validates the auto-m argument
        for spec_key in ("beta_schedule", "E0_schedule"):
            if spec_key in raw:
                _sampler(raw[spec_key])
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(data)

    def with_(self, **changes) -> "ScenarioConfig":
        data = copy.deepcopy(self.raw)
        data.update(changes)
        return ScenarioConfig.from_dict(data)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def model(self) -> str:
        return self.raw["model"]

    @property
    def lam(self) -> float:
        return float(self.raw["lambda"])

    @property
    def lambdas(self) -> list[float]:
        return [float(x) for x in self.raw.get("lambda_list", [self.raw["lambda"]])]

    @property
    def T_list(self) -> list[int]:
        return [int(t) for t in self.raw["T_list"]]

    @property
    def auto_m(self) -> bool:
        return isinstance(self.raw["m"], str)

    @property
    def G(self) -> float | None:
        m = self.raw["m"]
        if not isinstance(m, str):
            return None
        match = re.fullmatch(r"auto(?:\(\s*([0-9.eE+-]+)\s*\))?", m)
        g = float(match.group(1)) if match.group(1) else 0.5
        if not 0 < g < 1:
            raise ConfigError(f"auto(G) needs G in (0, 1), got {g}")
        return g

    @property
    def beta(self) -> Callable[[float], float]:
        return _sampler(self.raw["beta_schedule"])

    @property
    def E0(self) -> Callable[[float], float]:
        if "E0_schedule" in self.raw:
            return _sampler(self.raw["E0_schedule"])
        e0 = float(self.raw["E0"])
        return lambda s: e0


# ---------------------------------------------------------------------------
# model assembly


def build_model(cfg: ScenarioConfig, s: float):
    """``(h_S, h_E, v, beta)`` at schedule parameter ``s``."""
    beta = cfg.beta(s)
    if cfg.model == "custom":
        c = cfg["custom"]
        h_S, h_E, v = (as_operator(_matrix_from_json(c[k])) for k in ("h_S", "h_E", "v"))
        for name, op in (("h_S", h_S), ("h_E", h_E), ("v", v)):
            if not is_hermitian(op):
                raise ConfigError(f"custom {name} is not Hermitian")
        return h_S, h_E, v, beta
    qm = models.QubitModel(cfg.model, float(cfg["E"]), float(cfg["u1"]))
    return qm.h_S, qm.h_E(cfg.E0(s)), qm.v, beta


def make_schedule(cfg: ScenarioConfig, T: int, lam: float | None = None, m: int = 1) -> simulate.RISSchedule:
    h_S, _, _, _ = build_model(cfg, 0.0)
    return simulate.RISSchedule(
        h_S=h_S,
        h_E=lambda s: build_model(cfg, s)[1],
        beta=cfg.beta,
        v=lambda s: build_model(cfg, s)[2],
        lam=cfg.lam if lam is None else lam,
        tau=float(cfg["tau"]),
        T=T,
        m=m,
    )


def resolve_m(cfg: ScenarioConfig, lam: float | None = None, s_points: int = 5) -> int:
    if not cfg.auto_m:
        return int(cfg["m"])
    sched = make_schedule(cfg, 1, lam)
    m = channel.find_m(sched.channel, cfg.G, np.linspace(0, 1, s_points), seed=cfg["seed"])
    log.info("auto m for lambda=%g: %d", sched.lam, m)
    return m


def initial_state(cfg: ScenarioConfig, sched: simulate.RISSchedule) -> np.ndarray:
    spec = cfg["rho_i"]
    if spec == "invariant":
        return channel.invariant_state(sched.channel(0.0))
    if "gibbs" in spec:
        return gibbs_state(sched.h_S, float(spec["gibbs"]))
    rho = _matrix_from_json(spec["matrix"])
    try:
        return check_density_matrix(rho)
    except ValueError as exc:
        raise ConfigError(f"rho_i matrix: {exc}") from None


def output_dir(cfg: ScenarioConfig, override: str | None = None) -> Path:
    path = override or cfg["outputs"].get("dir") or os.environ.get(OUT_DIR_ENV) or "ris_out"
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# closed-form rate for the full-dipole model


def predicted_rate(cfg: ScenarioConfig, T: int, lam: float, m: int) -> float:
    """``lam² m ∫ gamma (beta E0/2) tanh(beta E0/2) ds`` by the trapezoidal rule on ``s = k/T``."""
    s = np.linspace(0.0, 1.0, T + 1)
    E = float(cfg["E"])
    f = [models.gamma_full_dipole(E, cfg.E0(x), float(cfg["tau"]), float(cfg["u1"]))
         * models.thermal_factor(cfg.beta(x), cfg.E0(x)) for x in s]
    return lam**2 * m * float(trapezoid(f, s))


# ---------------------------------------------------------------------------
# single runs and sweeps


@dataclass
class RunOutcome:
    T: int
    lam: float
    m: int
    ledger: simulate.RunLedger
    max_adiabatic_error: float
    runtime: float
    rate_ratio: float | None = None
    csv_path: str | None = None

    def row(self) -> dict:
        return {
            "T": self.T, "lambda": self.lam, "m": self.m,
            "sigma_tot": self.ledger.sigma_tot, "landauer_gap": self.ledger.landauer_gap,
            "max_adiabatic_error": self.max_adiabatic_error,
            "max_balance_residual": float(np.abs(self.ledger.balance_residual).max(initial=0.0)),
            "runtime": self.runtime, "rate_ratio": self.rate_ratio, "csv": self.csv_path,
        }


def run_scenario(cfg: ScenarioConfig, T: int, lam: float | None = None, m: int | None = None,
                 out: Path | None = None, adiabatic_check: bool = True) -> RunOutcome:
    lam = cfg.lam if lam is None else lam
    m = resolve_m(cfg, lam) if m is None else m
    t0 = time.perf_counter()
    sched = make_schedule(cfg, T, lam, m)
    rho_i = initial_state(cfg, sched)
    ledger = simulate.run(sched, rho_i, track_invariant=lam != 0)
    err = math.nan
    if adiabatic_check and lam != 0 and not ledger.incomplete:
        try:
            path = adiabatic.ProjectorPath.from_sampler(sched.channel, T, m)
            prop = adiabatic.build_propagator(path)
            err = adiabatic.adiabatic_error(path, prop, stride=max(1, T // 32), seed=cfg["seed"]).max_E1
        except RISError as exc:
            log.warning("adiabatic diagnostics unavailable: %s", exc)
    ratio = None
    if cfg.model == "qubit_fd" and lam != 0:
        pred = predicted_rate(cfg, T, lam, m)
        ratio = ledger.sigma_tot / (T * pred) if pred > 0 else None
    outcome = RunOutcome(T, lam, m, ledger, err, time.perf_counter() - t0, ratio)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"run_T{T}_lam{lam:g}"
        if cfg["outputs"].get("ledgers", True):
            outcome.csv_path = str(ledger.write_csv(out / f"{stem}.csv"))
        side = {**ledger.totals(), **{k: v for k, v in outcome.row().items() if k != "csv"}}
        tmp = out / f"{stem}.json.tmp"
        tmp.write_text(json.dumps(side, indent=2, default=float))
        tmp.replace(out / f"{stem}.json")
    return outcome


def _sweep_point(args):
    raw, T, lam, m, out = args
    res = run_scenario(ScenarioConfig(raw), T, lam, m, Path(out) if out else None)
    return res.row()


SWEEP_COLUMNS = ("T", "lambda", "m", "sigma_tot", "landauer_gap", "max_adiabatic_error",
                 "max_balance_residual", "runtime", "rate_ratio", "csv")


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] if r[name] is not None else np.nan for r in self.rows], dtype=float)

    def write_csv(self, path: Path) -> Path:
        tmp = path.with_suffix(".csv.tmp")
        with open(tmp, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: ("" if r[k] is None else repr(r[k]) if isinstance(r[k], float) else r[k])
                            for k in SWEEP_COLUMNS})
        tmp.replace(path)
        return path


def sweep(cfg: ScenarioConfig, out: Path | None = None, workers: int = 1) -> SweepResult:
    """Run every ``(T, lambda)`` pair; ``m`` is resolved once per ``lambda``."""
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    ms = {lam: resolve_m(cfg, lam) for lam in cfg.lambdas}
    jobs = [(cfg.raw, T, lam, ms[lam], str(out) if out else None) for lam in cfg.lambdas for T in cfg.T_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    result = SweepResult(rows)
    if out is not None:
        result.write_csv(out / "sweep.csv")
        if cfg["outputs"].get("svg", False):
            plot_sweep(result, out)
    return result


def plot_sweep(result: SweepResult, out: Path) -> list[Path]:
    """Static SVG charts: total entropy production against ``T`` and per-step sigma of the longest run."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for lam in sorted(set(r["lambda"] for r in result.rows)):
        rows = sorted((r for r in result.rows if r["lambda"] == lam), key=lambda r: r["T"])
        ax.loglog([r["T"] for r in rows], [max(r["sigma_tot"], 1e-300) for r in rows], "o-", label=f"λ={lam:g}")
    ax.set_xlabel("T")
    ax.set_ylabel("total entropy production")
    ax.legend()
    fig.tight_layout()
    paths.append(out / "sigma_tot_vs_T.svg")
    fig.savefig(paths[-1])
    plt.close(fig)

    longest = max(result.rows, key=lambda r: r["T"])
    if longest.get("csv"):
        data = simulate.read_ledger_csv(longest["csv"])
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(np.arange(1, len(data["sigma"]) + 1), data["sigma"], lw=0.8)
        ax.set_xlabel("step")
        ax.set_ylabel("sigma per step")
        fig.tight_layout()
        paths.append(out / "sigma_vs_step.svg")
        fig.savefig(paths[-1])
        plt.close(fig)
    return paths


# ---------------------------------------------------------------------------
# spectrum report


def spectrum_report(cfg: ScenarioConfig, s: float, lam: float | None = None) -> dict:
    lam = cfg.lam if lam is None else lam
    sched = make_schedule(cfg, 1, lam)
    L = sched.channel(s)
    sp = channel.spectral(L, seed=cfg["seed"])
    verdict = channel.irreducibility(L)
    cptp = channel.verify_cptp(L)
    out = {
        "s": s, "lambda": lam,
        "eigenvalues": [[float(e.real), float(e.imag)] for e in sp.eigs],
        "peripheral": [[float(e.real), float(e.imag)] for e in sp.peripheral_eigenvalues],
        "z": sp.z, "gap": sp.gap if math.isfinite(sp.gap) else None,
        "ell_spr": sp.ell_spr, "ell_norm": sp.ell_norm,
        "near_degenerate_boundary": sp.near_degenerate_boundary,
        "residue_check": sp.residue_check,
        "min_choi_eigenvalue": cptp.min_choi_eigenvalue, "trace_residual": cptp.trace_residual,
        "irreducible": verdict.irreducible, "irreducibility_reason": verdict.reason,
    }
    if verdict.irreducible:
        rho = channel.invariant_state(L)
        out["invariant_state"] = [[[float(x.real), float(x.imag)] for x in row] for row in rho]
    return out


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""


@dataclass
class VerifyReport:
    checks: list[Check]
    X_verdict: str
    z: int | None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed, "X_verdict": self.X_verdict, "z": self.z,
            "checks": [c.__dict__ for c in self.checks],
        }


def verify_suite(cfg: ScenarioConfig, s_points: int = 5, pinsker_samples: int = 200) -> VerifyReport:
    lam = cfg.lam
    checks: list[Check] = []
    grid = np.linspace(0.0, 1.0, s_points)
    sched0 = make_schedule(cfg, 1, lam)
    x_norms = []
    zs = set()
    for s in grid:
        L = sched0.channel(s)
        rep = channel.verify_cptp(L)
        checks.append(Check(f"cptp(s={s:.2f})", rep.ok, rep.min_choi_eigenvalue, -1e-10))
        if lam == 0:
            continue
        verdict = channel.irreducibility(L)
        checks.append(Check(f"irreducible(s={s:.2f})", verdict.irreducible,
                            verdict.fixed_point_min_eigenvalue, 1e-12, verdict.reason))
        if not verdict.irreducible:
            continue
        sp = channel.spectral(L, seed=cfg["seed"])
        zs.add(sp.z)
        checks.append(Check(f"peripheral_group(s={s:.2f})", sp.forms_root_group(), float(sp.z), 1e-8))
        rho = channel.invariant_state(L)
        _, _, xi = sched0.probe(s)
        U = sched0.unitary(s)
        kms = perturbation.kms_dual_check(L, rho, U, xi)
        x_norms.append(kms.X_norm)
        checks.append(Check(f"detailed_balance_consistency(s={s:.2f})", kms.consistent, kms.deviation, 1e-8,
                            f"X_norm={kms.X_norm:.3e}"))

    T = min(cfg.T_list)
    m = resolve_m(cfg, lam) if lam != 0 else (1 if cfg.auto_m else int(cfg["m"]))
    sched = make_schedule(cfg, T, lam, m)
    ledger = simulate.run(sched, initial_state(cfg, sched), track_invariant=lam != 0)
    checks.append(Check("run_complete", not ledger.incomplete, float(len(ledger)), float(T * m), ledger.error or ""))
    res = float(np.abs(ledger.balance_residual).max(initial=0.0))
    checks.append(Check("balance_residual", res <= 1e-9, res, 1e-9))
    smin = float(ledger.sigma.min(initial=0.0))
    checks.append(Check("sigma_nonnegative", smin >= -1e-9, smin, -1e-9))
    gap = ledger.landauer_gap
    checks.append(Check("landauer_gap_nonnegative", gap >= -1e-8, gap, -1e-8))
    diff = abs(ledger.sigma_tot - gap)
    checks.append(Check("sigma_tot_equals_gap", diff <= 1e-8, diff, 1e-8))

    # Pinsker lower bound on sampled steps, recomputed from the stored states
    stride = max(1, len(ledger) // pinsker_samples)
    worst = math.inf
    for i in range(0, len(ledger), stride):
        s = float(ledger.s[i])
        h_E, beta, xi = sched.probe(s)
        U = sched.unitary(s)
        rho = ledger.states[i]
        omega = U @ kron(rho, xi) @ U.conj().T
        after = channel.channel_from_unitary(U, xi, sched.d_sys, check=False).apply(rho)
        bound = 0.5 * float(trace_norm(omega - kron(after, xi))) ** 2
        worst = min(worst, float(ledger.sigma[i]) - bound)
    checks.append(Check("pinsker_bound", worst >= -1e-9, worst, -1e-9))

    if lam == 0:
        verdict = "zero entropy production" if abs(ledger.sigma_tot) <= 1e-10 else "unexpected entropy production"
    else:
        verdict = "detailed balance" if max(x_norms, default=math.inf) <= 1e-9 else "violated"
    return VerifyReport(checks, verdict, zs.pop() if len(zs) == 1 else None)
