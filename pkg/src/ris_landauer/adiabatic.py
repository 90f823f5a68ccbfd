"""Discrete adiabatic approximation for slowly varying channel sequences.

Given channels ``L_0, ..., L_T`` sampled along a smooth path, the peripheral
spectral projectors are transported step to step by Kato-type intertwiners.
Combined with the accumulated peripheral phases they give maps ``A_k`` that
track the peripheral part of the true product ``L_k ... L_1``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channel import (
    ChannelSpectrum,
    Superoperator,
    induced_trace_norm,
    power,
    require_gap,
    spectral,
)
from .errors import DimensionMismatch, StepTooLarge
from .linalg import eig_general
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProjectorPath:
    """Peripheral spectral data sampled at ``s = k/T`` for ``k = 0..T``.

    ``eigenvalues[k, j]`` and ``projectors[k, j]`` hold the ``j``-th peripheral
    eigenvalue and projector at step ``k``; ``P`` and ``Q`` their sums and
    complements.  ``c_P`` is the largest first or second divided difference of
    projectors and eigenvalues seen along the path.
    """

    T: int
    channels: np.ndarray
    eigenvalues: np.ndarray
    projectors: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    ell: float
    ell_spr: float
    gap: float
    c_P: float

    @property
    def z(self) -> int:
        return self.eigenvalues.shape[1]

    @property
    def dim(self) -> int:
        return self.P.shape[-1]

    @classmethod
    def from_spectra(cls, spectra: Sequence[ChannelSpectrum], channels: Sequence[np.ndarray] | None = None,
                     eig_power: int = 1, check_gap: bool = True, norm_stride: int | None = None) -> "ProjectorPath":
        """Assemble a path; ``eig_power`` raises eigenvalues when ``channels`` are powers."""
        if len(spectra) < 2:
            raise ValueError("a projector path needs at least two samples")
        z = spectra[0].z
        for k, sp in enumerate(spectra):
            if check_gap:
                require_gap(sp)
            if sp.z != z:
                raise ValueError(f"peripheral group order changes along the path (step {k}: {sp.z} vs {z})")
        T = len(spectra) - 1
        eig = np.array([sp.peripheral_eigenvalues for sp in spectra]) ** eig_power
        proj = np.array([sp.peripheral_projectors for sp in spectra])
        P = proj.sum(axis=1)
        n = P.shape[-1]
        Q = np.eye(n) - P
        mats = np.array([sp.channel.mat for sp in spectra]) if channels is None else np.asarray(channels)
        mats = np.linalg.matrix_power(mats, eig_power) if channels is None and eig_power > 1 else mats

        d1 = np.linalg.norm(np.diff(proj, axis=0), ord=2, axis=(-2, -1)).max() * T
        e1 = np.abs(np.diff(eig, axis=0)).max() * T
        c_P = max(d1, e1)
        if T >= 2:
            d2 = np.linalg.norm(proj[2:] - 2 * proj[1:-1] + proj[:-2], ord=2, axis=(-2, -1)).max() * T * T
            e2 = np.abs(eig[2:] - 2 * eig[1:-1] + eig[:-2]).max() * T * T
            c_P = max(c_P, d2, e2)

        stride = max(1, T // 16) if norm_stride is None else norm_stride
        lq = mats @ Q
        ell = max(induced_trace_norm(lq[k], restarts=8).value for k in range(0, T + 1, stride))
        ell_spr = max(
            float(np.max(np.abs(np.linalg.eigvals(lq[k])), initial=0.0)) for k in range(T + 1)
        )
        gap = min(sp.gap for sp in spectra) if z > 1 else math.inf
        return cls(T, mats, eig, proj, P, Q, float(ell), ell_spr, gap, float(c_P))

    @classmethod
    def from_sampler(cls, sampler: Callable[[float], Superoperator], T: int, m: int = 1,
                     tol: Tolerances = DEFAULT) -> "ProjectorPath":
        """Sample ``L(k/T)`` for ``k = 0..T``; with ``m > 1`` the path follows ``L^m``.

        Projectors of ``L^m`` coincide with those of ``L`` as long as ``gcd(m, z) = 1``,
        so they are computed on ``L`` where the spectrum is better separated.
        """
        channels = [sampler(k / T) for k in range(T + 1)]
        spectra = [spectral(c, cross_check=False, tol=tol) for c in channels]
        mats = np.array([power(c, m).mat for c in channels])
        return cls.from_spectra(spectra, channels=mats, eig_power=m)

    def first_increment_bound(self) -> float:
        return float(np.linalg.norm(np.diff(self.projectors, axis=0), ord=2, axis=(-2, -1)).max())


# ---------------------------------------------------------------------------
# Kato step


def inverse_sqrt_one_minus(x: np.ndarray, dp_norm: float | None = None,
                           tol: Tolerances = DEFAULT) -> np.ndarray:
    """``(I - x)^{-1/2}`` by binomial series for small ``x``, else by eigendecomposition."""
    n = x.shape[0]
    eye = np.eye(n, dtype=complex)
    small = dp_norm if dp_norm is not None else math.sqrt(np.linalg.norm(x, 2))
    if small < tol.series_switch:
        out = eye.copy()
        term = eye.copy()
        coeff = 1.0
        for k in range(1, 200):
            coeff *= (2 * k - 1) / (2 * k)
            term = term @ x
            add = coeff * term
            out += add
            if np.linalg.norm(add, 2) <= tol.series_rtol * np.linalg.norm(out, 2):
                break
        return out
    dec = eig_general(eye - x, tol)
    return (dec.right * dec.eigenvalues.astype(complex) ** -0.5) @ dec.left


def kato_step(prev: Sequence[np.ndarray], nxt: Sequence[np.ndarray],
              tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Intertwiners ``(kappa, kappa_dagger)`` between consecutive projector families.

    ``kappa`` maps the range of ``prev[j]`` onto the range of ``nxt[j]`` for
    every ``j``; ``kappa_dagger`` is its inverse on those ranges.
    """
    if len(prev) != len(nxt):
        raise DimensionMismatch("projector families differ in size")
    n = prev[0].shape[0]
    kappa = np.zeros((n, n), dtype=complex)
    kappa_d = np.zeros((n, n), dtype=complex)
    for p0, p1 in zip(prev, nxt):
        dp = p1 - p0
        norm = float(np.linalg.norm(dp, 2))
        if norm >= 1:
            raise StepTooLarge(f"projector increment has norm {norm:.3f} >= 1")
        r = inverse_sqrt_one_minus(dp @ dp, norm, tol)
        kappa += p1 @ p0 @ r
        kappa_d += p0 @ p1 @ r
    return kappa, kappa_d


# ---------------------------------------------------------------------------
# propagator


@dataclass(frozen=True, eq=False)
class AdiabaticPropagator:
    """Stacks indexed by ``k = 0..T``."""

    K: np.ndarray
    K_dagger: np.ndarray
    Phi: np.ndarray
    Phi_dagger: np.ndarray
    A: np.ndarray
    A_dagger: np.ndarray
    norm_bound: float

    def identity_residuals(self, path: ProjectorPath) -> dict[str, float]:
        """Largest deviation over ``k`` of every structural identity."""
        P0 = path.P[0]
        Q0 = path.Q[0]
        res = {
            "AdA=P0": np.abs(self.A_dagger @ self.A - P0).max(),
            "AAd=Pk": np.abs(self.A @ self.A_dagger - path.P).max(),
            "AQ0=0": np.abs(self.A @ Q0).max(),
            "Q0Ad=0": np.abs(Q0 @ self.A_dagger).max(),
        }
        inter = 0.0
        for j in range(path.z):
            lhs = self.A @ path.projectors[0, j]
            rhs = path.projectors[:, j] @ self.A
            inter = max(inter, float(np.abs(lhs - rhs).max()))
        res["APj0=PjkA"] = inter
        return {k: float(v) for k, v in res.items()}


def build_propagator(path: ProjectorPath, tol: Tolerances = DEFAULT) -> AdiabaticPropagator:
    T, n = path.T, path.dim
    K = np.empty((T + 1, n, n), dtype=complex)
    Kd = np.empty_like(K)
    K[0] = path.P[0]
    Kd[0] = path.P[0]
    for k in range(1, T + 1):
        kap, kap_d = kato_step(path.projectors[k - 1], path.projectors[k], tol)
        K[k] = kap @ K[k - 1]
        Kd[k] = Kd[k - 1] @ kap_d
    # accumulated phases; row 0 is the empty product
    phases = np.vstack([np.ones(path.z), np.cumprod(path.eigenvalues[1:], axis=0)])
    Phi = np.einsum("kj,jab->kab", phases, path.projectors[0])
    Phi_d = np.einsum("kj,jab->kab", phases.conj(), path.projectors[0])
    A = K @ Phi
    Ad = Phi_d @ Kd
    bound = float(np.linalg.norm(A, ord=2, axis=(-2, -1)).max())
    return AdiabaticPropagator(K, Kd, Phi, Phi_d, A, Ad, bound)


# ---------------------------------------------------------------------------
# error certification


@dataclass(frozen=True)
class AdiabaticErrorReport:
    """Errors at the evaluated steps ``k``; ``*_lower`` are attained values of the
    induced trace norm, ``*_upper`` are Frobenius-based upper bounds."""

    k: np.ndarray
    E1_lower: np.ndarray
    E1_upper: np.ndarray
    E2_lower: np.ndarray
    E2_upper: np.ndarray
    q_chain: np.ndarray

    @property
    def max_E1(self) -> float:
        return float(self.E1_lower.max())

    @property
    def max_E2(self) -> float:
        return float(self.E2_lower.max())

    def as_dict(self) -> dict:
        return {"max_E1": self.max_E1, "max_E2": self.max_E2,
                "max_E1_upper": float(self.E1_upper.max()), "max_q_chain": float(self.q_chain.max())}


def _upper(mat: np.ndarray, d: int) -> np.ndarray:
    return math.sqrt(d) * np.linalg.norm(mat, ord="fro", axis=(-2, -1))


def adiabatic_error(path: ProjectorPath, prop: AdiabaticPropagator, stride: int = 1,
                    restarts: int = 8, seed: int = 0) -> AdiabaticErrorReport:
    """Compare the true product ``L_k ... L_1`` with the adiabatic maps.

    ``E1(k) = ||L_k..L_1 - A_k - L^Q_k..L^Q_1 Q_0||`` and
    ``E2(k) = ||L_k..L_1 P_0 - L^P_k..L^P_1 P_0||``, both in the induced trace
    norm, evaluated every ``stride`` steps and at ``k = T``.
    """
    T, n = path.T, path.dim
    if prop.A.shape != (T + 1, n, n):
        raise DimensionMismatch("propagator and path have different shapes")
    d = int(round(math.sqrt(n)))
    full = np.eye(n, dtype=complex)
    qprod = path.Q[0].copy()
    pprod = path.P[0].copy()
    ks, e1l, e1u, e2l, e2u, qc = [], [], [], [], [], []
    for k in range(1, T + 1):
        Lk = path.channels[k]
        full = Lk @ full
        qprod = Lk @ path.Q[k] @ qprod
        pprod = Lk @ path.P[k] @ pprod
        if k % stride and k != T:
            continue
        r1 = full - prop.A[k] - qprod
        r2 = full @ path.P[0] - pprod
        ks.append(k)
        e1l.append(induced_trace_norm(r1, restarts=restarts, seed=seed).value)
        e2l.append(induced_trace_norm(r2, restarts=restarts, seed=seed).value)
        e1u.append(_upper(r1, d))
        e2u.append(_upper(r2, d))
        qc.append(induced_trace_norm(qprod, restarts=restarts, seed=seed).value)
    return AdiabaticErrorReport(np.array(ks), np.array(e1l), np.array(e1u), np.array(e2l),
                                np.array(e2u), np.array(qc))
