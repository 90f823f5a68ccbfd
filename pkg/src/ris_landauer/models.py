"""Two-level system coupled to two-level probes, with closed-form reference values.

Basis ordering is ``(ground, excited)`` for each factor, so the product basis
is ``|gg>, |ge>, |eg>, |ee>`` with the system first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import kron
from .quantum import gibbs_state

LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
RAISE = LOWER.conj().T
NUMBER = RAISE @ LOWER


def v_rotating_wave(u1: float = 1.0) -> np.ndarray:
    """``(u1/2)(a* ⊗ b + a ⊗ b*)``: exchanges one quantum between system and probe."""
    return 0.5 * u1 * (kron(RAISE, LOWER) + kron(LOWER, RAISE))


def v_full_dipole(u1: float = 1.0) -> np.ndarray:
    """``(u1/2)(a + a*) ⊗ (b + b*)``."""
    x = LOWER + RAISE
    return 0.5 * u1 * kron(x, x)


@dataclass(frozen=True)
class QubitModel:
    kind: str
    E: float
    u1: float = 1.0

    def __post_init__(self):
        if self.kind not in ("qubit_rw", "qubit_fd"):
            raise ValueError(f"unknown qubit model {self.kind!r}")

    @property
    def h_S(self) -> np.ndarray:
        return self.E * NUMBER

    def h_E(self, E0: float) -> np.ndarray:
        return E0 * NUMBER

    @property
    def v(self) -> np.ndarray:
        return v_rotating_wave(self.u1) if self.kind == "qubit_rw" else v_full_dipole(self.u1)


# ---------------------------------------------------------------------------
# rotating-wave closed forms


def rw_invariant_state(E: float, E0: float, beta: float) -> np.ndarray:
    """Gibbs state of ``h_S`` at the rescaled inverse temperature ``beta*E0/E``."""
    return gibbs_state(E * NUMBER, beta * E0 / E)


def rw_ell_spr(E: float, E0: float, lam: float, tau: float, u1: float = 1.0) -> float:
    """Spectral radius of the contracting part of the rotating-wave channel."""
    g = lam * u1
    detune = E - E0
    nu2 = detune**2 + g**2
    if nu2 == 0.0:
        return 1.0
    nu = math.sqrt(nu2)
    return math.sqrt(max(0.0, 1.0 - g**2 / nu2 * math.sin(nu * tau / 2) ** 2))


# ---------------------------------------------------------------------------
# full-dipole closed forms


def fd_invariant_state(E: float, E0: float, lam: float, tau: float, beta: float,
                       u1: float = 1.0) -> np.ndarray:
    """Diagonal invariant state of the full-dipole channel."""
    g = lam * u1
    nu = math.sqrt((E0 - E) ** 2 + g**2)
    eta = math.sqrt((E + E0) ** 2 + g**2)
    c1 = (1 - math.cos(nu * tau)) * eta**2
    c2 = nu**2 * (1 - math.cos(eta * tau))
    w = math.exp(beta * E0)
    norm = (1 + w) * (c1 + c2)
    return np.diag([(w * c1 + c2) / norm, (c1 + w * c2) / norm]).astype(complex)


def gamma_full_dipole(E: float, E0: float, tau: float, u1: float = 1.0) -> float:
    """Coefficient of the leading small-coupling entropy production per step.

    Two branches: a generic one for ``E != E0`` and its continuous limit at
    resonance.
    """
    if math.isclose(E, E0, rel_tol=0.0, abs_tol=1e-12):
        x = E0 * tau
        return 2 * u1**2 * tau**2 * math.sin(x) ** 2 / (1 + 2 * x**2 - math.cos(2 * x))
    sp = math.sin((E0 + E) * tau / 2) ** 2
    sm = math.sin((E0 - E) * tau / 2) ** 2
    den = (E0 + E) ** 2 * sm + (E0 - E) ** 2 * sp
    return 4 * u1**2 * sp * sm / den


def thermal_factor(beta: float, E0: float) -> float:
    x = beta * E0 / 2
    return x * math.tanh(x)


def fd_sigma_per_step(lam: float, beta: float, E: float, E0: float, tau: float, u1: float = 1.0) -> float:
    """Leading-order entropy production of one full-dipole step at small coupling."""
    return lam**2 * gamma_full_dipole(E, E0, tau, u1) * thermal_factor(beta, E0)
