"""Reduced dynamics of a repeated interaction step and its spectral analysis.

Superoperators act on column-stacked operators: ``vec(X)[i + j*d] = X[i, j]``,
so ``vec(A X B) = (B.T ⊗ A) vec(X)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CPTPViolation,
    DimensionMismatch,
    NearDegeneratePeripheral,
    NoSuchM,
    NonDiagonalizable,
    ReducibleChannel,
)
from .linalg import (
    SpectralDecomposition,
    as_operator,
    eig_general,
    hermitian_part,
    herm_propagator,
    kron,
)
from .tolerances import DEFAULT, Tolerances

log = logging.getLogger(__name__)


def vec(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return np.swapaxes(x, -1, -2).reshape(*x.shape[:-2], -1)


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(math.sqrt(v.shape[-1]))) if d is None else d
    return np.swapaxes(v.reshape(*v.shape[:-1], d, d), -1, -2)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on ``d_sys x d_sys`` operators stored as a ``d² x d²`` matrix."""

    d_sys: int
    mat: np.ndarray
    cptp: bool = False

    def __post_init__(self):
        n = self.d_sys * self.d_sys
        if self.mat.shape != (n, n):
            raise DimensionMismatch(f"superoperator on d={self.d_sys} needs shape {(n, n)}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.einsum("ij,...j->...i", self.mat, vec(x))
        return unvec(out, self.d_sys)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.d_sys, self.mat @ other.mat, self.cptp and other.cptp)

    def adjoint(self) -> "Superoperator":
        """Heisenberg-picture dual with respect to ``(A, B) -> Tr(A^* B)``."""
        return Superoperator(self.d_sys, self.mat.conj().T)

    def power(self, m: int) -> "Superoperator":
        return power(self, m)

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls(d, np.eye(d * d, dtype=complex), cptp=True)

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "Superoperator":
        mat = np.asarray(mat, dtype=complex)
        return cls(int(round(math.sqrt(mat.shape[0]))), mat)


def from_kraus(kraus: Sequence[np.ndarray]) -> Superoperator:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d = kraus[0].shape[0]
    mat = sum(np.kron(k.conj(), k) for k in kraus)
    return Superoperator(d, mat)


def from_function(fn: Callable[[np.ndarray], np.ndarray], d: int) -> Superoperator:
    """Tabulate a linear map by applying it to the matrix units."""
    mat = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for i in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            mat[:, i + j * d] = vec(fn(e))
    return Superoperator(d, mat)


def transpose_map(d: int) -> Superoperator:
    return from_function(lambda x: x.T, d)


def depolarizing_to(rho: np.ndarray, p: float = 1.0) -> Superoperator:
    """``x -> p Tr(x) rho + (1 - p) x``; a replacement channel when ``p = 1``."""
    rho = as_operator(rho)
    d = rho.shape[0]
    mat = p * np.outer(vec(rho), vec(np.eye(d))) + (1 - p) * np.eye(d * d)
    return Superoperator(d, mat.astype(complex), cptp=True)


def power(s: Superoperator, m: int) -> Superoperator:
    if m < 0:
        raise ValueError("power needs m >= 0")
    return Superoperator(s.d_sys, np.linalg.matrix_power(s.mat, m), s.cptp)


# ---------------------------------------------------------------------------
# construction from Hamiltonian data


def total_hamiltonian(h_S, h_E, v, lam: float) -> np.ndarray:
    h_S = as_operator(h_S)
    h_E = as_operator(h_E)
    v = as_operator(v)
    d_s, d_e = h_S.shape[0], h_E.shape[0]
    if v.shape != (d_s * d_e, d_s * d_e):
        raise DimensionMismatch(f"interaction has shape {v.shape}, expected {(d_s * d_e,) * 2}")
    return kron(h_S, np.eye(d_e)) + kron(np.eye(d_s), h_E) + lam * v


def step_unitary(h_S, h_E, v, lam: float, tau: float, tol: Tolerances = DEFAULT) -> np.ndarray:
    """``exp(-i tau (h_S ⊗ 1 + 1 ⊗ h_E + lam v))``."""
    return herm_propagator(total_hamiltonian(h_S, h_E, v, lam), tau, tol)


def kraus_from_unitary(U: np.ndarray, xi: np.ndarray, d_sys: int) -> list[np.ndarray]:
    """Kraus operators of ``rho -> Tr_E U (rho ⊗ xi) U*``."""
    d_env = xi.shape[0]
    p, phi = np.linalg.eigh(hermitian_part(xi))
    blocks = U.reshape(d_sys, d_env, d_sys, d_env)
    # rotate the probe factor into the eigenbasis of xi
    blocks = np.einsum("ka,iajb,bl->ikjl", phi.conj().T, blocks, phi)
    kraus = []
    for b in range(d_env):
        if p[b] <= 0:
            continue
        for a in range(d_env):
            kraus.append(math.sqrt(p[b]) * blocks[:, a, :, b])
    return kraus


def channel_from_unitary(U, xi, d_sys: int, check: bool = True, tol: Tolerances = DEFAULT) -> Superoperator:
    s = from_kraus(kraus_from_unitary(np.asarray(U), np.asarray(xi), d_sys))
    s = Superoperator(s.d_sys, s.mat, cptp=True)
    if check:
        report = verify_cptp(s, tol)
        if not report.ok:
            raise CPTPViolation(
                f"reduced dynamics failed CPTP verification: min Choi eigenvalue "
                f"{report.min_choi_eigenvalue:.3e}, trace residual {report.trace_residual:.3e}"
            )
    return s


def reduced_dynamics(h_S, h_E, v, lam: float, tau: float, xi, check: bool = True,
                     tol: Tolerances = DEFAULT) -> Superoperator:
    """The channel ``rho -> Tr_E(U (rho ⊗ xi) U*)`` of one interaction step."""
    U = step_unitary(h_S, h_E, v, lam, tau, tol)
    return channel_from_unitary(U, xi, np.asarray(h_S).shape[0], check, tol)


# ---------------------------------------------------------------------------
# CPTP structure


def choi(s: Superoperator) -> np.ndarray:
    """Choi matrix ``sum_ij E_ij ⊗ S(E_ij)``."""
    d = s.d_sys
    t = s.mat.reshape(d, d, d, d)  # [l, k, j, i] -> S(E_ij)[k, l]
    return t.transpose(3, 1, 2, 0).reshape(d * d, d * d)


@dataclass(frozen=True)
class CPTPReport:
    min_choi_eigenvalue: float
    trace_residual: float
    hermiticity_residual: float
    cp: bool
    tp: bool

    @property
    def ok(self) -> bool:
        return self.cp and self.tp


def verify_cptp(s: Superoperator, tol: Tolerances = DEFAULT) -> CPTPReport:
    d = s.d_sys
    j = choi(s)
    herm = float(np.max(np.abs(j - j.conj().T)))
    min_eig = float(np.linalg.eigvalsh(hermitian_part(j))[0])
    vec_id = vec(np.eye(d))
    tr_res = float(np.max(np.abs(vec_id.conj() @ s.mat - vec_id.conj())))
    return CPTPReport(
        min_choi_eigenvalue=min_eig,
        trace_residual=tr_res,
        hermiticity_residual=herm,
        cp=min_eig >= -tol.cptp and herm <= tol.cptp,
        tp=tr_res <= tol.cptp,
    )


# ---------------------------------------------------------------------------
# induced trace norm


@dataclass(frozen=True)
class NormEstimate:
    """Certified lower bound ``value`` on the 1->1 norm, plus a crude upper bound."""

    value: float
    upper: float
    converged: bool

    def __float__(self) -> float:
        return self.value


def _unit_vectors(rng, n, d):
    z = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def induced_trace_norm(s: Superoperator | np.ndarray, restarts: int | None = None,
                       seed: int = 0, tol: Tolerances = DEFAULT) -> NormEstimate:
    """Estimate ``sup ||S(x)||_1`` over ``||x||_1 <= 1``.

    The supremum is attained on rank-one inputs ``|u><v|``.  Each restart runs
    an alternating ascent: for fixed ``u, v`` the best dual unitary ``W`` is the
    polar factor of ``S(|u><v|)``; for fixed ``W`` the best ``u, v`` are the top
    singular vectors of ``S*(W)``.  Every value visited is attained, so the
    result is a lower bound.  ``upper`` is ``sqrt(d)`` times the 2->2 norm.
    """
    mat = s.mat if isinstance(s, Superoperator) else np.asarray(s, dtype=complex)
    d = int(round(math.sqrt(mat.shape[0])))
    n = tol.norm_restarts if restarts is None else restarts
    rng = np.random.default_rng(seed)
    upper = math.sqrt(d) * float(np.linalg.norm(mat, 2))
    if upper == 0.0:
        return NormEstimate(0.0, 0.0, True)

    u = _unit_vectors(rng, n, d)
    v = _unit_vectors(rng, n, d)
    # deterministic starts on matrix units make the estimate exact for simple maps
    k = min(n, d)
    u[:k] = np.eye(d)[:k]
    v[:k] = np.eye(d)[:k]
    adj = mat.conj().T
    best = np.zeros(n)
    converged = False
    for _ in range(tol.norm_max_iter):
        x = np.einsum("ni,nj->nij", u, v.conj())
        y = unvec(vec(x) @ mat.T, d)
        a, sv, bh = np.linalg.svd(y)
        vals = sv.sum(axis=1)
        w = a @ bh
        z = unvec(vec(w) @ adj.T, d)
        zu, zs, zvh = np.linalg.svd(z)
        u = zu[:, :, 0]
        v = zvh[:, 0, :].conj()
        new = np.maximum(vals, zs[:, 0])
        if np.all(new - best <= tol.norm_rtol * np.maximum(new, 1.0)):
            best = np.maximum(best, new)
            converged = True
            break
        best = np.maximum(best, new)
    # re-evaluate the final rank-one inputs exactly so the reported value is attained
    x = np.einsum("ni,nj->nij", u, v.conj())
    final = np.linalg.svd(unvec(vec(x) @ mat.T, d), compute_uv=False).sum(axis=1)
    value = float(max(final.max(), best.max()))
    return NormEstimate(min(value, upper), upper, converged)


# ---------------------------------------------------------------------------
# spectral analysis


def residue_projector(mat: np.ndarray, center: complex, radius: float, nodes: int = 64) -> np.ndarray:
    """Trapezoidal quadrature of ``(1/2πi) ∮ (z - A)^{-1} dz`` on a circle."""
    n = mat.shape[0]
    eye = np.eye(n)
    acc = np.zeros((n, n), dtype=complex)
    for t in np.arange(nodes) * (2 * np.pi / nodes):
        e = np.exp(1j * t)
        z = center + radius * e
        acc += radius * e * np.linalg.solve(z * eye - mat, eye)
    return acc / nodes


@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    """Spectral data of one channel.

    ``projectors[c]`` is the spectral projector of cluster ``c`` with eigenvalue
    ``eigs_clustered[c]``; ``peripheral`` lists the peripheral clusters sorted
    by argument in ``[0, 2π)``, so ``peripheral[0]`` is the eigenvalue 1 when
    present.
    """

    channel: Superoperator
    decomposition: SpectralDecomposition
    eigs: np.ndarray
    eigs_clustered: np.ndarray
    projectors: tuple[np.ndarray, ...]
    peripheral: tuple[int, ...]
    P: np.ndarray
    Q: np.ndarray
    gap: float
    ell_spr: float
    second_modulus: float
    near_degenerate_boundary: bool
    residue_check: float
    seed: int = 0

    @property
    def z(self) -> int:
        return len(self.peripheral)

    @property
    def peripheral_eigenvalues(self) -> np.ndarray:
        return self.eigs_clustered[list(self.peripheral)]

    @property
    def peripheral_projectors(self) -> list[np.ndarray]:
        return [self.projectors[c] for c in self.peripheral]

    @property
    def multiplicities(self) -> list[int]:
        return [len(c) for c in self.decomposition.clusters]

    @cached_property
    def LQ(self) -> np.ndarray:
        return self.channel.mat @ self.Q

    @cached_property
    def ell_norm_estimate(self) -> NormEstimate:
        return induced_trace_norm(self.LQ, seed=self.seed)

    @property
    def ell_norm(self) -> float:
        return self.ell_norm_estimate.value

    def forms_root_group(self, atol: float = 1e-8) -> bool:
        """Peripheral eigenvalues equal ``{exp(2πik/z)}``, each simple."""
        z = self.z
        if z == 0:
            return False
        if any(len(self.decomposition.clusters[c]) != 1 for c in self.peripheral):
            return False
        roots = np.exp(2j * np.pi * np.arange(z) / z)
        ev = self.peripheral_eigenvalues
        return all(np.min(np.abs(ev - r)) <= atol for r in roots)


def spectral(s: Superoperator, peripheral_tol: float | None = None, cross_check: bool = True,
             seed: int = 0, tol: Tolerances = DEFAULT) -> ChannelSpectrum:
    """Spectral projectors, peripheral set, gap and contraction data of ``s``.

    Projectors are built from biorthogonal eigenvector dyads.  When
    ``cross_check`` is set each peripheral projector is compared against the
    contour-integral definition on three random circles; the largest deviation
    is stored in ``residue_check``.
    """
    ptol = tol.peripheral if peripheral_tol is None else peripheral_tol
    dec = eig_general(s.mat, tol)
    if dec.residual > tol.reconstruction:
        log.warning("eigendecomposition residual %.2e exceeds %.0e", dec.residual, tol.reconstruction)
    reps = dec.representatives
    projectors = tuple(dec.projector(c) for c in range(len(dec.clusters)))
    mods = np.abs(reps)
    periph = [c for c in range(len(reps)) if mods[c] > 1 - ptol]
    periph.sort(key=lambda c: np.angle(reps[c]) % (2 * np.pi))

    n = s.mat.shape[0]
    for c in periph:
        res = np.linalg.norm(s.mat @ projectors[c] - reps[c] * projectors[c], 2)
        if res > 1e-6 * max(1.0, np.linalg.norm(projectors[c], 2)):
            raise NonDiagonalizable(f"peripheral eigenvalue {reps[c]:.6g} is not semisimple")

    P = sum((projectors[c] for c in periph), np.zeros((n, n), dtype=complex))
    Q = np.eye(n) - P
    inner = [mods[c] for c in range(len(reps)) if c not in periph]
    ell_spr = float(max(inner, default=0.0))
    pe = reps[periph]
    gap = math.inf
    for i in range(len(pe)):
        for j in range(i + 1, len(pe)):
            gap = min(gap, float(abs(pe[i] - pe[j])))

    residue = 0.0
    if cross_check and periph:
        rng = np.random.default_rng(seed)
        for c in periph:
            others = [abs(reps[c] - reps[o]) for o in range(len(reps)) if o != c]
            iso = min(others, default=1.0)
            for _ in range(3):
                r = iso * rng.uniform(0.25, 0.75)
                pr = residue_projector(s.mat, reps[c], r)
                residue = max(residue, float(np.max(np.abs(pr - projectors[c]))))

    return ChannelSpectrum(
        channel=s,
        decomposition=dec,
        eigs=dec.eigenvalues,
        eigs_clustered=reps,
        projectors=projectors,
        peripheral=tuple(periph),
        P=P,
        Q=Q,
        gap=gap,
        ell_spr=ell_spr,
        second_modulus=ell_spr,
        near_degenerate_boundary=ell_spr > 1 - tol.peripheral_margin or bool(
            np.any(np.abs(np.abs(pe) - 1) > tol.peripheral_roundoff)),
        residue_check=residue,
        seed=seed,
    )


def require_gap(spec: ChannelSpectrum) -> ChannelSpectrum:
    if spec.near_degenerate_boundary:
        raise NearDegeneratePeripheral(
            f"next eigenvalue modulus {spec.second_modulus:.12f} is within the peripheral margin"
        )
    return spec


# ---------------------------------------------------------------------------
# irreducibility and invariant states


@dataclass(frozen=True)
class IrreducibilityVerdict:
    irreducible: bool
    fixed_point_multiplicity: int
    fixed_point_min_eigenvalue: float
    reason: str


def _fixed_point(s: Superoperator) -> np.ndarray:
    n = s.mat.shape[0]
    _, _, vh = np.linalg.svd(s.mat - np.eye(n))
    x = unvec(vh[-1].conj(), s.d_sys)
    x = x / np.trace(x)
    return hermitian_part(x)


def irreducibility(s: Superoperator, tol: Tolerances = DEFAULT) -> IrreducibilityVerdict:
    w = np.linalg.eigvals(s.mat)
    mult = int(np.sum(np.abs(w - 1) <= tol.cluster_rtol))
    if mult == 0:
        return IrreducibilityVerdict(False, 0, float("nan"), "1 is not an eigenvalue")
    rho = _fixed_point(s)
    mu = float(np.linalg.eigvalsh(rho)[0])
    if mult > 1:
        return IrreducibilityVerdict(False, mult, mu, "eigenvalue 1 is degenerate")
    if mu <= tol.faithful_floor:
        return IrreducibilityVerdict(False, mult, mu, "fixed point is not full rank")
    return IrreducibilityVerdict(True, mult, mu, "simple eigenvalue 1 with faithful fixed point")


def invariant_state(s: Superoperator, tol: Tolerances = DEFAULT) -> np.ndarray:
    """The unique invariant state of an irreducible channel."""
    verdict = irreducibility(s, tol)
    if not verdict.irreducible:
        raise ReducibleChannel(verdict.reason)
    return _fixed_point(s)


# ---------------------------------------------------------------------------
# choosing the repetition number m


def find_m(sampler: Callable[[float], Superoperator], G: float, s_grid: Sequence[float],
           m_cap: int | None = None, tol: Tolerances = DEFAULT, seed: int = 0) -> int:
    """Smallest ``m`` with ``max_s ||L(s)^m Q(s)|| <= 1 - G`` and ``gcd(m, z) = 1``.

    Because each ``L(s)`` is a contraction, ``m -> ||L^m Q||`` is nonincreasing,
    so an exponential bracket followed by bisection finds the threshold.
    """
    if not 0 < G < 1:
        raise ValueError("G must lie in (0, 1)")
    cap = tol.m_cap if m_cap is None else m_cap
    specs = [spectral(sampler(float(s)), cross_check=False, tol=tol) for s in s_grid]
    for sp in specs:
        if sp.ell_spr >= 1:
            raise NoSuchM("a sampled channel violates the spectral-radius bound")
    z = max(sp.z for sp in specs)
    target = 1 - G

    def worst(m: int) -> float:
        return max(
            induced_trace_norm(np.linalg.matrix_power(sp.channel.mat, m) @ sp.Q, seed=seed, tol=tol).value
            for sp in specs
        )

    def ok(m: int) -> bool:
        return worst(m) <= target

    if ok(1):
        m = 1
    else:
        lo, hi = 1, 2
        while not ok(hi):
            lo, hi = hi, hi * 2
            if lo > cap:
                raise NoSuchM(f"no m <= {cap} reaches 1 - G = {target}")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        m = hi
    while math.gcd(m, z) != 1 or not ok(m):
        m += 1
    if m > cap:
        raise NoSuchM(f"no m <= {cap} reaches 1 - G = {target}")
    log.info("find_m: chose m=%d for G=%g (z=%d)", m, G, z)
    return m
