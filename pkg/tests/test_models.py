import math

import numpy as np
import pytest

from ris_landauer import models as mo
from ris_landauer.linalg import kron
from ris_landauer.quantum import gibbs_state


def test_rotating_wave_couples_single_excitations_only():
    v = mo.v_rotating_wave(u1=1.0)
    expected = np.zeros((4, 4))
    expected[1, 2] = expected[2, 1] = 0.5
    assert np.allclose(v, expected)


def test_full_dipole_minus_rotating_wave():
    u1 = 1.3
    diff = mo.v_full_dipole(u1) - mo.v_rotating_wave(u1)
    assert np.allclose(diff, 0.5 * u1 * (kron(mo.LOWER, mo.LOWER) + kron(mo.RAISE, mo.RAISE)))


def test_hamiltonians():
    m = mo.QubitModel("qubit_fd", 0.9)
    assert np.allclose(m.h_S, np.diag([0, 0.9]))
    assert np.allclose(m.h_E(0.8), np.diag([0, 0.8]))
    with pytest.raises(ValueError):
        mo.QubitModel("maser", 1.0)


@pytest.mark.parametrize("E,E0,tau", [(0.9, 0.8, 0.5), (1.3, 0.4, 1.1), (0.5, 2.0, 0.3)])
def test_gamma_is_positive_and_matches_cosine_form_up_to_sign(E, E0, tau):
    g = mo.gamma_full_dipole(E, E0, tau)
    num = (math.cos(E0 * tau) - math.cos(E * tau)) ** 2
    den = 2 * E0 * E * math.sin(E0 * tau) * math.sin(E * tau) - (E0**2 + E**2) * (1 - math.cos(E0 * tau) * math.cos(E * tau))
    assert g > 0
    assert g == pytest.approx(-num / den, rel=1e-10)


@pytest.mark.parametrize("E0,tau", [(0.8, 0.5), (1.1, 1.7)])
def test_gamma_branches_join_continuously(E0, tau):
    at = mo.gamma_full_dipole(E0, E0, tau)
    near = mo.gamma_full_dipole(E0 + 1e-7, E0, tau)
    assert abs(at - near) <= 1e-6


def test_full_dipole_invariant_state_is_a_state():
    rho = mo.fd_invariant_state(0.9, 0.8, 0.3, 0.5, 1.0)
    assert np.trace(rho).real == pytest.approx(1)
    assert np.all(np.diag(rho).real > 0)


def test_rw_ell_spr_resonance_and_decoupling():
    assert mo.rw_ell_spr(1.0, 1.0, 1.0, math.pi) == pytest.approx(0, abs=1e-12)
    assert mo.rw_ell_spr(1.0, 0.8, 0.0, 0.5) == 1.0


def test_rw_invariant_state_is_rescaled_gibbs():
    assert np.allclose(mo.rw_invariant_state(1.0, 0.8, 2.0), gibbs_state(np.diag([0, 1.0]), 1.6))
