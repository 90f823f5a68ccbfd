"""Step-by-step execution of repeated interaction runs with an entropy ledger."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .channel import (
    Superoperator,
    channel_from_unitary,
    induced_trace_norm,
    invariant_state,
    spectral,
    step_unitary,
    unvec,
    vec,
)
from .errors import RISError
from .linalg import as_operator, hermitian_part, kron, partial_trace_env, partial_trace_sys, trace_norm
from .quantum import check_density_matrix, gibbs_state, log_faithful, von_neumann_entropy
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)

LEDGER_COLUMNS = ("k", "j", "s", "beta", "dS", "dQ", "sigma", "balance_residual",
                  "dist_to_invariant", "X_norm")


@dataclass(frozen=True)
class RISSchedule:
    """Slowly varying probe data ``s -> (h_E(s), beta(s), v(s))`` on ``[0, 1]``.

    Step ``k' = 1..T*m`` uses the probe of block ``k = (k'-1)//m + 1``, sampled
    at ``s = k/T``.  ``s = 0`` is never used for a step; it only fixes the
    initial spectral data.
    """

    h_S: np.ndarray
    h_E: Callable[[float], np.ndarray]
    beta: Callable[[float], float]
    v: Callable[[float], np.ndarray]
    lam: float
    tau: float
    T: int
    m: int = 1

    def __post_init__(self):
        if self.T < 1 or self.m < 1:
            raise ValueError("T and m must be positive")

    @property
    def d_sys(self) -> int:
        return self.h_S.shape[0]

    @property
    def d_env(self) -> int:
        return np.asarray(self.h_E(0.0)).shape[0]

    @property
    def n_steps(self) -> int:
        return self.T * self.m

    def block_of(self, step: int) -> int:
        return (step - 1) // self.m + 1

    def s_of(self, k: int) -> float:
        return k / self.T

    def probe(self, s: float, tol: Tolerances = DEFAULT):
        h_E = as_operator(self.h_E(s))
        beta = float(self.beta(s))
        if beta < 0:
            raise ValueError(f"beta({s}) = {beta} is negative")
        return h_E, beta, gibbs_state(h_E, beta, tol)

    def unitary(self, s: float, tol: Tolerances = DEFAULT) -> np.ndarray:
        return step_unitary(self.h_S, self.h_E(s), self.v(s), self.lam, self.tau, tol)

    def channel(self, s: float, tol: Tolerances = DEFAULT) -> Superoperator:
        _, _, xi = self.probe(s, tol)
        return channel_from_unitary(self.unitary(s, tol), xi, self.d_sys, check=False, tol=tol)

    def with_T(self, T: int) -> "RISSchedule":
        return RISSchedule(self.h_S, self.h_E, self.beta, self.v, self.lam, self.tau, T, self.m)

    @classmethod
    def constant(cls, h_S, h_E, beta: float, v, lam: float, tau: float, T: int, m: int = 1) -> "RISSchedule":
        h_E = as_operator(h_E)
        v = as_operator(v)
        return cls(as_operator(h_S), lambda s: h_E, lambda s: beta, lambda s: v, lam, tau, T, m)


@dataclass(frozen=True)
class StepRecord:
    k: int
    j: int
    s: float
    dS: float
    dQ: float
    sigma: float
    beta: float
    state_before: np.ndarray
    state_after: np.ndarray
    dist_to_invariant: float = math.nan
    X_norm: float = math.nan

    @property
    def balance_residual(self) -> float:
        return self.dS + self.sigma - self.beta * self.dQ


# ---------------------------------------------------------------------------
# single step and batched block kernel


def _block_quantities(rhos: np.ndarray, U: np.ndarray, xi: np.ndarray, h_E: np.ndarray,
                      tol: Tolerances):
    """Entropy bookkeeping for a stack of pre-step states sharing one probe."""
    d_s, d_e = rhos.shape[-1], xi.shape[0]
    joint = kron(rhos, xi)
    omega = U @ joint @ U.conj().T
    after = partial_trace_env(omega, d_s, d_e)
    probe_after = partial_trace_sys(omega, d_s, d_e)
    dS = von_neumann_entropy(rhos) - von_neumann_entropy(after)
    dQ = np.einsum("ij,...ji->...", h_E, probe_after).real - np.trace(h_E @ xi).real
    log_omega = log_faithful(omega, tol, "joint state after the step")
    log_ref = log_faithful(kron(after, xi), tol, "decoupled reference state")
    sigma = np.einsum("...ij,...ji->...", omega, log_omega - log_ref).real
    return after, np.atleast_1d(dS), np.atleast_1d(dQ), np.atleast_1d(sigma)


def simulate_step(rho, h_S, h_E, v, lam: float, tau: float, beta: float,
                  tol: Tolerances = DEFAULT) -> tuple[np.ndarray, StepRecord]:
    """One interaction with a fresh thermal probe."""
    rho = check_density_matrix(rho, tol)
    h_E = as_operator(h_E)
    xi = gibbs_state(h_E, beta, tol)
    U = step_unitary(h_S, h_E, v, lam, tau, tol)
    after, dS, dQ, sigma = _block_quantities(rho[None], U, xi, h_E, tol)
    rec = StepRecord(1, 1, 1.0, float(dS[0]), float(dQ[0]), float(sigma[0]), float(beta), rho, after[0])
    return after[0], rec


# ---------------------------------------------------------------------------
# full runs


@dataclass(eq=False)
class RunLedger:
    """Columnar per-step ledger; ``states[i]`` is the state before step ``i``."""

    k: np.ndarray
    j: np.ndarray
    s: np.ndarray
    beta: np.ndarray
    dS: np.ndarray
    dQ: np.ndarray
    sigma: np.ndarray
    dist_to_invariant: np.ndarray
    X_norm: np.ndarray
    states: np.ndarray
    incomplete: bool = False
    error: str | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.k)

    @property
    def balance_residual(self) -> np.ndarray:
        return self.dS + self.sigma - self.beta * self.dQ

    @property
    def sigma_tot(self) -> float:
        return float(self.sigma.sum())

    @property
    def dS_tot(self) -> float:
        return float(self.dS.sum())

    @property
    def beta_dQ_tot(self) -> float:
        return float((self.beta * self.dQ).sum())

    @property
    def landauer_gap(self) -> float:
        return self.beta_dQ_tot - self.dS_tot

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def record(self, i: int) -> StepRecord:
        return StepRecord(int(self.k[i]), int(self.j[i]), float(self.s[i]), float(self.dS[i]),
                          float(self.dQ[i]), float(self.sigma[i]), float(self.beta[i]),
                          self.states[i], self.states[i + 1], float(self.dist_to_invariant[i]),
                          float(self.X_norm[i]))

    @property
    def steps(self) -> Iterator[StepRecord]:
        return (self.record(i) for i in range(len(self)))

    def totals(self) -> dict:
        return {
            "steps": len(self),
            "sigma_tot": self.sigma_tot,
            "dS_tot": self.dS_tot,
            "beta_dQ_tot": self.beta_dQ_tot,
            "landauer_gap": self.landauer_gap,
            "max_balance_residual": float(np.abs(self.balance_residual).max(initial=0.0)),
            "min_sigma": float(self.sigma.min(initial=math.inf)),
            "incomplete": self.incomplete,
            "error": self.error,
            **self.meta,
        }

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "k": self.k, "j": self.j, "s": self.s, "beta": self.beta, "dS": self.dS, "dQ": self.dQ,
            "sigma": self.sigma, "balance_residual": self.balance_residual,
            "dist_to_invariant": self.dist_to_invariant, "X_norm": self.X_norm,
        }

    def write_csv(self, path: str | Path) -> Path:
        """Write the ledger; floats use ``repr`` so reading back is exact."""
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        cols = self.columns()
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LEDGER_COLUMNS)
            for i in range(len(self)):
                w.writerow([repr(int(cols[c][i])) if c in ("k", "j") else repr(float(cols[c][i]))
                            for c in LEDGER_COLUMNS])
        tmp.replace(path)
        return path

    def write_json(self, path: str | Path) -> Path:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.totals(), indent=2, default=float))
        tmp.replace(path)
        return path


def read_ledger_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for i, name in enumerate(header):
        conv = int if name in ("k", "j") else float
        out[name] = np.array([conv(r[i]) for r in body])
    return out


def run(schedule: RISSchedule, rho_i, track_invariant: bool = True,
        tol: Tolerances = DEFAULT) -> RunLedger:
    """Execute blocks ``k = 1..T``, each made of ``m`` identical probes.

    States are propagated with the block's superoperator; the joint states of
    all ``m`` steps of a block are then rebuilt in one batch to evaluate
    ``dS``, ``dQ`` and ``sigma`` exactly on the joint space.  A failure aborts
    the run and returns the ledger so far, flagged ``incomplete``.
    """
    rho = check_density_matrix(rho_i, tol)
    T, m, d = schedule.T, schedule.m, schedule.d_sys
    n = T * m
    cols = {c: np.full(n, np.nan) for c in ("s", "beta", "dS", "dQ", "sigma", "dist", "X")}
    ks = np.repeat(np.arange(1, T + 1), m)
    js = np.tile(np.arange(1, m + 1), T)
    states = np.empty((n + 1, d, d), dtype=complex)
    states[0] = rho
    done = 0
    error = None
    try:
        for k in range(1, T + 1):
            s = schedule.s_of(k)
            h_E, beta, xi = schedule.probe(s, tol)
            U = schedule.unitary(s, tol)
            L = channel_from_unitary(U, xi, d, check=False, tol=tol)
            sl = slice((k - 1) * m, k * m)
            x = vec(hermitian_part(states[done]))
            diag = np.arange(d) * (d + 1)
            block = np.empty((m + 1, d * d), dtype=complex)
            block[0] = x
            for jj in range(m):
                # renormalising the trace keeps rounding from drifting into the balance identity
                x = L.mat @ x
                x /= x[diag].sum().real
                block[jj + 1] = x
            before = unvec(block[:m], d)
            after, dS, dQ, sigma = _block_quantities(before, U, xi, h_E, tol)
            states[sl.start + 1:sl.stop + 1] = after
            cols["s"][sl] = s
            cols["beta"][sl] = beta
            cols["dS"][sl] = dS
            cols["dQ"][sl] = dQ
            cols["sigma"][sl] = sigma
            if track_invariant:
                rho_inv = invariant_state(L, tol)
                cols["dist"][sl] = trace_norm(after - rho_inv)
                ref = kron(rho_inv, xi)
                cols["X"][sl] = trace_norm(U @ ref @ U.conj().T - ref)
            done = k * m
    except RISError as exc:
        error = f"{type(exc).__name__}: {exc}"
        log.error("run aborted at block %d: %s", done // m + 1, error)
    cut = slice(0, done)
    return RunLedger(ks[cut], js[cut], cols["s"][cut], cols["beta"][cut], cols["dS"][cut], cols["dQ"][cut],
                     cols["sigma"][cut], cols["dist"][cut], cols["X"][cut], states[:done + 1],
                     incomplete=done < n, error=error, meta={"T": T, "m": m, "lambda": schedule.lam})


@dataclass(frozen=True)
class TrackingResult:
    k: np.ndarray
    s: np.ndarray
    dist: np.ndarray
    q0_weight: float
    ell: float

    def max_in(self, lo: float = 0.25, hi: float = 0.75) -> float:
        mask = (self.s >= lo) & (self.s <= hi)
        return float(self.dist[mask].max())


def adiabatic_state_tracking(schedule: RISSchedule, rho_i, tol: Tolerances = DEFAULT) -> TrackingResult:
    """Trace-norm distance of the state to the current invariant state after every step.

    Also reports ``||Q_0 rho_i||_1``, the weight of the initial state outside
    the peripheral subspace, which controls the initial transient.
    """
    rho_i = check_density_matrix(rho_i, tol)
    L0 = schedule.channel(0.0, tol)
    rho0 = invariant_state(L0, tol)
    q0_weight = float(trace_norm(rho_i - np.trace(rho_i) * rho0))
    ledger = run(schedule, rho_i, track_invariant=True, tol=tol)
    if ledger.incomplete:
        raise RISError(ledger.error)
    Q0 = spectral(L0, cross_check=False, tol=tol).Q
    ell = induced_trace_norm(L0.power(schedule.m).mat @ Q0, restarts=8).value
    return TrackingResult(ledger.k, ledger.s, ledger.dist_to_invariant, q0_weight, ell)
