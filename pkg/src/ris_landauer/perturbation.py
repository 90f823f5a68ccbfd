"""Second-order relative-entropy expansion, detailed-balance defects and small-coupling theory."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import Superoperator, invariant_state
from .errors import NonFaithfulState, NonTraceless
from .linalg import (
    as_operator,
    cluster_values,
    dagger,
    hermitian_part,
    herm_eig,
    herm_propagator,
    kron,
    partial_trace_env,
    trace_norm,
)
from .quantum import pinsker_lower_bound, relative_entropy_close
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# the bilinear form F_eta


@dataclass(frozen=True, eq=False)
class EtaSpectral:
    """Clustered spectral decomposition of a faithful state.

    ``mu[i]`` ascend; ``labels[a]`` gives the cluster of eigenvector ``a``.
    """

    eta: np.ndarray
    vectors: np.ndarray
    mu: np.ndarray
    labels: np.ndarray

    @classmethod
    def of(cls, eta, tol: Tolerances = DEFAULT) -> "EtaSpectral":
        eta = hermitian_part(as_operator(eta))
        w, v = np.linalg.eigh(eta)
        if w[0] <= tol.faithful_floor:
            raise NonFaithfulState(f"state is not faithful (smallest eigenvalue {w[0]:.3e})", float(w[0]))
        groups = cluster_values(w.astype(complex), tol.cluster_rtol * float(w[-1]))
        labels = np.empty(len(w), dtype=int)
        for c, g in enumerate(groups):
            labels[g] = c
        mu = np.array([w[g].mean() for g in groups])
        return cls(eta, v, mu, labels)

    @property
    def inf_sp(self) -> float:
        return float(self.mu[0])

    @property
    def projectors(self) -> list[np.ndarray]:
        out = []
        for c in range(len(self.mu)):
            cols = self.vectors[:, self.labels == c]
            out.append(cols @ cols.conj().T)
        return out

    def weights(self) -> np.ndarray:
        """``W[a, b]`` multiplying ``A_ab B_ba`` in the eigenbasis."""
        ca, cb = self.labels[:, None], self.labels[None, :]
        mu_a, mu_b = self.mu[ca], self.mu[cb]
        with np.errstate(divide="ignore", invalid="ignore"):
            off = (np.log(mu_a) - np.log(mu_b)) / (mu_a - mu_b)
        return np.where(ca == cb, 0.5 / mu_a, np.where(ca < cb, off, 0.0))


def _check_traceless(a: np.ndarray, name: str, atol: float = 1e-10):
    tr = np.trace(a)
    if abs(tr) > atol:
        raise NonTraceless(f"{name} has trace {tr:.3e}", tr)


def F_eta(sp: EtaSpectral, A, B=None, check: bool = True) -> complex:
    """``sum_i Tr(A p_i B p_i)/(2 mu_i) + sum_{i<j} Tr(A p_j B p_i) L(mu_i, mu_j)``.

    ``L(x, y) = (log x - log y)/(x - y)``.  Numerically coincident eigenvalues
    share a cluster and only contribute through the diagonal term.  With one
    argument the quadratic form ``F(A, A)`` is returned as a real number.
    """
    A = as_operator(A)
    quad = B is None
    B = A if quad else as_operator(B)
    if check:
        _check_traceless(A, "first argument")
        _check_traceless(B, "second argument")
    v = sp.vectors
    a = dagger(v) @ A @ v
    b = dagger(v) @ B @ v
    val = complex(np.sum(a * b.T * sp.weights()))
    return val.real if quad else val


# ---------------------------------------------------------------------------
# expansion check


@dataclass(frozen=True)
class ExpansionCheck:
    exact: float
    predicted: float
    residual: float
    size: float
    pinsker: float
    admissible: bool

    @property
    def pinsker_ok(self) -> bool:
        return self.exact >= self.pinsker - 1e-12

    @property
    def cubic_ratio(self) -> float:
        return self.residual / self.size**3 if self.size > 0 else 0.0


def entropy_expansion_check(eta, D1, D2, tol: Tolerances = DEFAULT) -> ExpansionCheck:
    """Compare ``S(eta+D1 | eta+D2)`` with its quadratic approximation ``F_eta(D1-D2)``."""
    sp = EtaSpectral.of(eta, tol)
    D1 = as_operator(D1)
    D2 = as_operator(D2)
    exact = relative_entropy_close(sp.eta + D1, sp.eta + D2, D1 - D2, tol)
    pred = F_eta(sp, D1 - D2)
    size = max(float(np.linalg.norm(D1, 2)), float(np.linalg.norm(D2, 2)))
    return ExpansionCheck(
        exact=float(exact),
        predicted=float(pred),
        residual=abs(exact - pred),
        size=size,
        pinsker=pinsker_lower_bound(sp.eta + D1, sp.eta + D2),
        admissible=size <= sp.inf_sp / 4,
    )


# ---------------------------------------------------------------------------
# detailed-balance defect and first-order coefficient


def X_of_s(U, rho_inv, xi) -> np.ndarray:
    """``U (rho_inv ⊗ xi) U* - rho_inv ⊗ xi``; vanishes exactly under detailed balance."""
    ref = kron(as_operator(rho_inv), as_operator(xi))
    return U @ ref @ dagger(U) - ref


def D_of_step(channel: Superoperator, U, rho_prev, rho_inv, xi) -> np.ndarray:
    """Discrepancy between the decoupled and joint images of ``rho_prev - rho_inv``."""
    delta = as_operator(rho_prev) - as_operator(rho_inv)
    xi = as_operator(xi)
    return kron(channel.apply(delta), xi) - U @ kron(delta, xi) @ dagger(U)


def _levels(h0: np.ndarray, merge: float):
    w, v = herm_eig(h0)
    groups = cluster_values(w.astype(complex), merge)
    energies = np.array([w[g].mean() for g in groups])
    projs = [v[:, g] @ v[:, g].conj().T for g in groups]
    return energies, projs


def first_order_M(h_S, h_E, v, tau: float, rho0, rho1, xi, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Coefficient of ``lambda`` in the expansion of the detailed-balance defect.

    The propagator expands as ``U = (1 + lambda Y + O(lambda^2)) U0`` where
    ``Y`` is assembled block by block on the eigenspaces of
    ``h0 = h_S ⊗ 1 + 1 ⊗ h_E``.  Levels closer than ``tol.level_merge`` are
    merged, which selects the ``-i tau`` diagonal branch.
    """
    h_S, h_E, v = as_operator(h_S), as_operator(h_E), as_operator(v)
    rho0, rho1, xi = as_operator(rho0), as_operator(rho1), as_operator(xi)
    d_s, d_e = h_S.shape[0], h_E.shape[0]
    h0 = kron(h_S, np.eye(d_e)) + kron(np.eye(d_s), h_E)
    eta = kron(rho0, xi)
    comm = float(np.abs(eta @ h0 - h0 @ eta).max())
    if comm > 1e-10:
        raise ValueError(f"zeroth-order state does not commute with h0 (residual {comm:.2e})")
    energies, projs = _levels(h0, tol.level_merge)
    Y = np.zeros_like(h0)
    for i, (ei, pi) in enumerate(zip(energies, projs)):
        for j, (ej, pj) in enumerate(zip(energies, projs)):
            if i == j:
                Y += -1j * tau * (pi @ v @ pi)
            else:
                gap = ei - ej
                Y += (pi @ v @ pj) * (np.expm1(-1j * tau * gap) / gap)
    U0 = herm_propagator(h0, tau)
    r1 = kron(rho1, xi)
    # eta commutes with U0, so only the first-order factor Y acts on it
    return U0 @ r1 @ dagger(U0) - r1 + Y @ eta - eta @ Y


# ---------------------------------------------------------------------------
# lambda-expansion of the invariant state


@dataclass(frozen=True)
class InvariantExpansion:
    rho0: np.ndarray
    rho1: np.ndarray
    error_estimate: float


def invariant_state_expansion(family: Callable[[float], Superoperator], h: float | None = None,
                              tol: Tolerances = DEFAULT) -> InvariantExpansion:
    """``rho_inv(lambda) = rho0 + lambda rho1 + O(lambda^2)`` from samples at ``±h, ±2h``.

    Richardson extrapolation cancels the leading error of the plain central
    differences; the distance between the two estimates is reported.
    """
    h = tol.fd_step if h is None else h
    r = {x: invariant_state(family(x), tol) for x in (-2 * h, -h, h, 2 * h)}
    avg1 = 0.5 * (r[h] + r[-h])
    avg2 = 0.5 * (r[2 * h] + r[-2 * h])
    rho0 = hermitian_part((4 * avg1 - avg2) / 3)
    plain = (r[h] - r[-h]) / (2 * h)
    rho1 = hermitian_part((8 * (r[h] - r[-h]) - (r[2 * h] - r[-2 * h])) / (12 * h))
    rho1 -= np.trace(rho1) / rho1.shape[0] * np.eye(rho1.shape[0])
    err = float(max(np.abs(rho1 - plain).max(), np.abs(rho0 - avg1).max()))
    return InvariantExpansion(rho0, rho1, err)


# ---------------------------------------------------------------------------
# detailed balance through the time-reversed channel


@dataclass(frozen=True)
class KMSReport:
    """``deviation`` measures the duality relation; ``X_norm`` the invariance defect.

    ``X = 0`` implies the relation, but the relation can hold with ``X != 0``
    (it does for the two-level models shipped here), so both are reported.
    """

    deviation: float
    X_norm: float
    atol: float

    @property
    def holds(self) -> bool:
        return self.deviation <= self.atol

    @property
    def X_vanishes(self) -> bool:
        return self.X_norm <= self.atol

    @property
    def verdict(self) -> str:
        return "detailed balance" if self.X_vanishes else "violated"

    @property
    def consistent(self) -> bool:
        """False only when ``X`` vanishes but the relation fails, which would contradict theory."""
        return self.holds or not self.X_vanishes


def kms_dual_check(channel: Superoperator, rho_inv, U, xi, atol: float = 1e-8,
                   tol: Tolerances = DEFAULT) -> KMSReport:
    """Compare the state-weighted dual of ``channel`` with the time-reversed step.

    Left side: ``rho^{1/2} L*(rho^{-1/2} x rho^{-1/2}) rho^{1/2}``; right side:
    ``Tr_E(U* (x ⊗ xi) U)``; both evaluated on all matrix units ``x``.
    """
    rho_inv = as_operator(rho_inv)
    xi = as_operator(xi)
    d = rho_inv.shape[0]
    w, vecs = herm_eig(rho_inv, tol)
    if w[0] <= tol.faithful_floor:
        raise NonFaithfulState("invariant state is not faithful", float(w[0]))
    half = (vecs * np.sqrt(w)) @ dagger(vecs)
    ihalf = (vecs / np.sqrt(w)) @ dagger(vecs)
    dual = channel.adjoint()
    units = np.zeros((d * d, d, d), dtype=complex)
    units[np.arange(d * d), np.arange(d * d) % d, np.arange(d * d) // d] = 1.0
    lhs = half @ dual.apply(ihalf @ units @ ihalf) @ half
    rhs = partial_trace_env(dagger(U) @ kron(units, xi) @ U, d, xi.shape[0])
    dev = float(np.abs(lhs - rhs).max())
    x_norm = float(trace_norm(X_of_s(U, rho_inv, xi)))
    return KMSReport(dev, x_norm, atol)


# ---------------------------------------------------------------------------
# small-coupling prediction of the entropy production


@dataclass(frozen=True)
class SmallCouplingPrediction:
    value: float
    delta: float
    perturbation_norm: float

    @property
    def admissible(self) -> bool:
        return self.perturbation_norm <= self.delta


def sigma_small_coupling(M, D, lam: float, rho0, xi, X_norm: float | None = None,
                         tol: Tolerances = DEFAULT) -> SmallCouplingPrediction:
    """``lam² F(M,M) + F(D,D) - lam F(D,M) - lam F(M,D)`` with ``F`` built on ``rho0 ⊗ xi``.

    The admissibility threshold is a sixteenth of the smallest eigenvalue of
    ``rho0 ⊗ xi``; inadmissible predictions are returned with a warning.
    """
    sp = EtaSpectral.of(kron(as_operator(rho0), as_operator(xi)), tol)
    M = as_operator(M)
    D = as_operator(D)
    val = lam**2 * F_eta(sp, M) + F_eta(sp, D) - lam * F_eta(sp, D, M) - lam * F_eta(sp, M, D)
    size = X_norm if X_norm is not None else float(trace_norm(lam * M)) + float(trace_norm(D))
    out = SmallCouplingPrediction(float(np.real(val)), sp.inf_sp / 16, size)
    if not out.admissible:
        log.warning("small-coupling prediction outside admissible region (%.3e > %.3e)", size, out.delta)
    return out
