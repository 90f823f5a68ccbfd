import math

import numpy as np
import pytest
from hypothesis import given, settings

from ris_landauer import quantum as q
from ris_landauer.errors import NonFaithfulState
from ris_landauer.linalg import trace_norm

from strategies import hermitians, seeds, states


def binary_kl(p, r):
    return p * math.log(p / r) + (1 - p) * math.log((1 - p) / (1 - r))


class TestGibbs:
    def test_infinite_temperature(self, rng):
        h = q.random_hermitian(3, rng)
        assert np.allclose(q.gibbs_state(h, 0.0), np.eye(3) / 3)

    def test_two_level(self):
        E0, beta = 0.8, 1.3
        w = math.exp(-beta * E0)
        assert np.allclose(q.gibbs_state(np.diag([0, E0]), beta), np.diag([1, w]) / (1 + w))

    @given(hermitians(4), seeds)
    def test_commutes_and_faithful(self, h, seed):
        beta = np.random.default_rng(seed).uniform(0, 5)
        xi = q.gibbs_state(h, beta)
        assert np.abs(xi @ h - h @ xi).max() <= 1e-12 * max(1, np.abs(h).max())
        assert np.linalg.eigvalsh(xi).min() > 0
        assert np.trace(xi).real == pytest.approx(1)

    def test_large_beta_is_stable(self):
        xi = q.gibbs_state(np.diag([0.0, 1.0]), 800.0)
        assert np.all(np.isfinite(xi))

    def test_rejects_infinite_beta(self):
        with pytest.raises(ValueError):
            q.gibbs_state(np.eye(2), math.inf)


class TestEntropy:
    def test_pure_state(self):
        assert q.von_neumann_entropy(np.diag([1.0, 0.0])) == pytest.approx(0, abs=1e-15)

    def test_maximally_mixed(self):
        assert q.von_neumann_entropy(np.eye(5) / 5) == pytest.approx(math.log(5))

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.77])
    def test_binary(self, p):
        expected = -p * math.log(p) - (1 - p) * math.log(1 - p)
        assert q.von_neumann_entropy(np.diag([p, 1 - p])) == pytest.approx(expected, rel=1e-13)

    @given(states(3), seeds)
    def test_unitary_invariance(self, rho, seed):
        u = q.random_unitary(3, np.random.default_rng(seed))
        assert abs(q.von_neumann_entropy(u @ rho @ u.conj().T) - q.von_neumann_entropy(rho)) <= 1e-10

    def test_batched(self):
        out = q.von_neumann_entropy(np.stack([np.eye(2) / 2, np.diag([1.0, 0.0])]))
        assert np.allclose(out, [math.log(2), 0])


class TestRelativeEntropy:
    @given(states(3))
    def test_self_is_zero(self, rho):
        assert abs(q.relative_entropy(rho, rho)) <= 1e-12

    def test_small_binary_perturbation(self):
        eps = 1e-3
        val = q.relative_entropy(np.eye(2) / 2 + np.diag([eps, -eps]), np.eye(2) / 2)
        assert val == pytest.approx(2e-6, abs=1e-9)
        assert val == pytest.approx(binary_kl(0.5 + eps, 0.5), abs=1e-15)

    @given(states(2), states(2))
    def test_diagonal_pairs_match_binary_kl(self, a, b):
        a = np.diag(np.diag(a).real)
        b = np.diag(np.diag(b).real)
        assert q.relative_entropy(a, b) == pytest.approx(binary_kl(a[0, 0], b[0, 0]), abs=1e-12)

    @given(states(3), states(3))
    def test_pinsker(self, a, b):
        assert q.relative_entropy(a, b) >= 0.5 * trace_norm(a - b) ** 2 - 1e-12

    def test_non_faithful_is_rejected(self):
        with pytest.raises(NonFaithfulState) as info:
            q.relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0]))
        assert info.value.min_eigenvalue == pytest.approx(0.0, abs=1e-15)


class TestValidation:
    def test_accepts_state(self, rng):
        q.check_density_matrix(q.random_density_matrix(3, rng))

    @pytest.mark.parametrize("bad", [np.diag([0.5, 0.4]), np.diag([1.2, -0.2]), np.array([[0.5, 1], [0, 0.5]])])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            q.check_density_matrix(bad)

    def test_rank_deficient_generator(self, rng):
        rho = q.random_density_matrix(4, rng, rank=1)
        assert q.min_eigenvalue(rho) == pytest.approx(0, abs=1e-12)
        assert not q.is_faithful(rho)


class TestRelativeEntropyClose:
    @given(seeds)
    @settings(max_examples=25)
    def test_agrees_with_direct_formula(self, seed):
        rng = np.random.default_rng(seed)
        a, b = q.random_density_matrix(3, rng), q.random_density_matrix(3, rng)
        assert q.relative_entropy_close(a, b, a - b) == pytest.approx(q.relative_entropy(a, b), abs=1e-12)

    def test_identical_states(self, rng):
        a = q.random_density_matrix(4, rng)
        assert q.relative_entropy_close(a, a, np.zeros((4, 4))) == 0.0

    def test_log_mean_inverse(self):
        x = np.array([0.3, 0.3, 1e-3])
        y = np.array([0.3, 0.3 + 1e-14, 2e-3])
        val = q.log_mean_inverse(x, y)
        assert val[0] == pytest.approx(1 / 0.3, rel=1e-15)
        assert val[1] == pytest.approx(1 / 0.3, rel=1e-12)
        assert val[2] == pytest.approx(np.log(0.5) / -1e-3, rel=1e-14)

    def test_resolves_tiny_entropies(self, rng):
        mpmath = pytest.importorskip("mpmath")
        mpmath.mp.dps = 40
        eta = 0.8 * q.random_density_matrix(3, rng) + 0.2 * np.eye(3) / 3
        h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        delta = 1e-7 * (h + h.conj().T)
        delta -= np.trace(delta) / 3 * np.eye(3)
        rho, sigma = eta + delta, eta

        def mlog(m):
            w, v = mpmath.eighe(mpmath.matrix(m.tolist()))
            return v * mpmath.diag([mpmath.log(x) for x in w]) * v.H

        r, sg = mpmath.matrix(rho.tolist()), mpmath.matrix(sigma.tolist())
        prod = r * (mlog(rho) - mlog(sigma))
        # positive-operator form, so rounding in the stored traces does not enter the reference
        ref = float(mpmath.re(sum(prod[i, i] - r[i, i] + sg[i, i] for i in range(3))))
        assert ref > 0
        assert abs(q.relative_entropy_close(rho, sigma, delta) - ref) <= 1e-6 * ref
