"""States, Gibbs states and entropy functionals (natural logarithms, k_B = 1)."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonFaithfulState
from .linalg import as_operator, dagger, hermitian_part, herm_eig, is_hermitian, trace_norm
from .tolerances import DEFAULT, Tolerances


def check_density_matrix(rho, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Validate ``rho`` as a state and return its Hermitian part.

    Raises ``ValueError`` when ``rho`` is not Hermitian, not unit trace or has
    an eigenvalue below ``-tol.positivity``.
    """
    rho = as_operator(rho)
    if not is_hermitian(rho, tol.hermitian):
        raise ValueError("density matrix is not Hermitian")
    rho = hermitian_part(rho)
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.any(np.abs(tr - 1) > tol.trace * max(1, rho.shape[-1])):
        raise ValueError(f"density matrix has trace {tr}")
    if np.any(np.linalg.eigvalsh(rho)[..., 0] < -tol.positivity):
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(np.asarray(rho)))[0])


def is_faithful(rho: np.ndarray, tol: Tolerances = DEFAULT) -> bool:
    return min_eigenvalue(rho) > tol.faithful_floor


def gibbs_state(h, beta: float, tol: Tolerances = DEFAULT) -> np.ndarray:
    """``exp(-beta h) / Tr exp(-beta h)``, computed with a shifted spectrum for stability."""
    if not np.isfinite(beta):
        raise ValueError("beta must be finite")
    w, v = herm_eig(h, tol)
    x = -beta * w
    p = np.exp(x - x.max())
    p /= p.sum()
    return (v * p) @ dagger(v)


def thermal_populations(energies, beta: float) -> np.ndarray:
    x = -beta * np.asarray(energies, dtype=float)
    p = np.exp(x - x.max())
    return p / p.sum()


def _xlogx(mu: np.ndarray) -> np.ndarray:
    mu = np.clip(mu, 0.0, None)
    out = np.zeros_like(mu)
    pos = mu > 0
    out[pos] = mu[pos] * np.log(mu[pos])
    return out


def von_neumann_entropy(rho) -> float | np.ndarray:
    """``-Tr rho log rho`` with ``0 log 0 = 0``; accepts stacks of states."""
    mu = np.linalg.eigvalsh(hermitian_part(np.asarray(rho, dtype=complex)))
    s = -_xlogx(mu).sum(axis=-1)
    return float(s) if np.ndim(s) == 0 else s


def log_faithful(rho, tol: Tolerances = DEFAULT, name: str = "state"):
    """Matrix logarithm of a faithful state, or :class:`NonFaithfulState`."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(rho, dtype=complex)))
    floor = float(np.min(w))
    if floor <= tol.faithful_floor:
        raise NonFaithfulState(
            f"{name} is not faithful (smallest eigenvalue {floor:.3e})", min_eigenvalue=floor
        )
    return (v * np.log(w)[..., None, :]) @ dagger(v)


def relative_entropy(eta, nu, tol: Tolerances = DEFAULT) -> float | np.ndarray:
    """``S(eta | nu) = Tr eta (log eta - log nu)`` for faithful states.

    Stacks of pairs are supported; the faithfulness check then applies to every
    member.  No regularisation is applied to near-singular inputs.
    """
    eta = np.asarray(eta, dtype=complex)
    nu = np.asarray(nu, dtype=complex)
    if eta.shape != nu.shape:
        raise DimensionMismatch(f"shapes {eta.shape} and {nu.shape} differ")
    log_eta = log_faithful(eta, tol, "first argument")
    log_nu = log_faithful(nu, tol, "second argument")
    val = np.einsum("...ij,...ji->...", eta, log_eta - log_nu).real
    return float(val) if np.ndim(val) == 0 else val


def log_mean_inverse(x, y):
    """``(log x - log y)/(x - y)``, equal to ``1/x`` on the diagonal, evaluated without cancellation."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    u = (x - y) / y
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.log1p(u) / (x - y)
    return np.where(np.abs(u) < 1e-300, 1.0 / y, val)


def relative_entropy_close(eta, nu, delta, tol: Tolerances = DEFAULT) -> float:
    """``S(eta | nu)`` for nearby faithful states, given their difference ``delta = eta - nu``.

    Uses ``log eta - log nu = int_0^inf (eta + s)^-1 delta (nu + s)^-1 ds``, so the
    result is a sum of terms proportional to ``delta``.  Rounding then scales with
    ``||delta||`` instead of with the entropies, which matters once ``S`` falls
    below about 1e-10.  ``Tr delta`` is subtracted, i.e. the positive-operator form
    ``Tr eta (log eta - log nu) - Tr eta + Tr nu`` is returned: identical on states,
    and free of the first-order error a rounded trace would otherwise cause.
    """
    eta = hermitian_part(np.asarray(eta, dtype=complex))
    nu = hermitian_part(np.asarray(nu, dtype=complex))
    lam, v = np.linalg.eigh(eta)
    kap, w = np.linalg.eigh(nu)
    for name, floor in (("first argument", lam[0]), ("second argument", kap[0])):
        if floor <= tol.faithful_floor:
            raise NonFaithfulState(f"{name} is not faithful (smallest eigenvalue {floor:.3e})", float(floor))
    delta = np.asarray(delta, dtype=complex)
    x = dagger(v) @ delta @ w
    y = dagger(w) @ v
    weights = lam[:, None] * log_mean_inverse(lam[:, None], kap[None, :])
    return float(np.real(np.sum(weights * x * y.T) - np.trace(delta)))


def pinsker_lower_bound(eta, nu) -> float:
    return 0.5 * float(trace_norm(np.asarray(eta) - np.asarray(nu))) ** 2


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state from the induced (Hilbert-Schmidt for ``rank=d``) measure."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (g + g.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
