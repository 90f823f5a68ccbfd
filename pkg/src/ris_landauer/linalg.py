"""Dense complex linear algebra kernels.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``.  Most kernels
also accept a stack of operators with shape ``(..., d, d)`` so the simulator can
batch work over many steps at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, EigenSolverError, NotHermitian
from .tolerances import DEFAULT, Tolerances


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionMismatch(f"expected square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2).conj()


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def is_hermitian(a: np.ndarray, atol: float = DEFAULT.hermitian) -> bool:
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= atol * scale)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product ``a ⊗ b``; entry ``(i*db + k, j*db + l) = a[i, j] * b[k, l]``.

    Leading batch dimensions broadcast, so ``kron(stack_of_rhos, xi)`` works.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    da, db = a.shape[-1], b.shape[-1]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(*out.shape[:-4], da * db, da * db)


def _split(ab: np.ndarray, d_sys: int, d_env: int) -> np.ndarray:
    ab = np.asarray(ab)
    if ab.shape[-1] != d_sys * d_env or ab.shape[-2] != d_sys * d_env:
        raise DimensionMismatch(
            f"operator of shape {ab.shape[-2:]} is not on a {d_sys}x{d_env} product space"
        )
    return ab.reshape(*ab.shape[:-2], d_sys, d_env, d_sys, d_env)


def partial_trace_env(ab: np.ndarray, d_sys: int, d_env: int) -> np.ndarray:
    """Trace out the second tensor factor."""
    return np.einsum("...ikjk->...ij", _split(ab, d_sys, d_env))


def partial_trace_sys(ab: np.ndarray, d_sys: int, d_env: int) -> np.ndarray:
    """Trace out the first tensor factor."""
    return np.einsum("...kikj->...ij", _split(ab, d_sys, d_env))


def herm_eig(h: np.ndarray, tol: Tolerances = DEFAULT):
    h = as_operator(h)
    if not is_hermitian(h, tol.hermitian):
        raise NotHermitian("expected a Hermitian operator")
    return np.linalg.eigh(hermitian_part(h))


def herm_function(h: np.ndarray, f, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its eigendecomposition."""
    w, v = herm_eig(h, tol)
    return (v * f(w)[..., None, :]) @ dagger(v)


def herm_propagator(h: np.ndarray, t: float, tol: Tolerances = DEFAULT) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h``."""
    return herm_function(h, lambda w: np.exp(-1j * t * w), tol)


def trace_norm(a: np.ndarray) -> np.ndarray | float:
    s = np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)
    return s.sum(axis=-1)


def operator_norm(a: np.ndarray) -> np.ndarray | float:
    s = np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)
    return s[..., 0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-data of a diagonalizable matrix.

    ``right[:, j]`` and ``left[j, :]`` are biorthonormal (``left @ right = I``),
    so the spectral projector of eigenvalue ``j`` is ``outer(right[:, j], left[j])``.
    ``clusters`` groups numerically coincident eigenvalues; ``representatives``
    holds the mean eigenvalue of every cluster.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    clusters: tuple[tuple[int, ...], ...]
    representatives: np.ndarray
    residual: float

    def projector(self, cluster: int) -> np.ndarray:
        idx = list(self.clusters[cluster])
        return self.right[:, idx] @ self.left[idx, :]

    def cluster_of(self, index: int) -> int:
        for c, members in enumerate(self.clusters):
            if index in members:
                return c
        raise IndexError(index)


def cluster_values(values: np.ndarray, atol: float) -> list[list[int]]:
    """Single-linkage grouping of complex values closer than ``atol``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= atol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def eig_general(m: np.ndarray, tol: Tolerances = DEFAULT) -> SpectralDecomposition:
    """Eigendecomposition of a general (nonnormal) square matrix.

    Uses LAPACK's Hessenberg reduction + shifted QR (``zgeev``).  Left vectors
    come from inverting the right-vector matrix, which makes the pairing
    exactly biorthogonal.  Raises :class:`EigenSolverError` if QR fails to
    converge or if the reconstruction residual exceeds the configured bound.
    """
    m = as_operator(m)
    try:
        w, v = scipy.linalg.eig(m, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigenSolverError(f"QR iteration did not converge: {exc}") from exc
    try:
        left = np.linalg.inv(v)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError("matrix is not diagonalizable (singular eigenvector basis)") from exc

    norm = max(np.linalg.norm(m, 2), np.finfo(float).tiny)
    residual = float(np.linalg.norm(m - (v * w) @ left, 2) / norm)
    if not np.isfinite(residual):
        raise EigenSolverError("non-finite reconstruction residual")

    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    groups = cluster_values(w, tol.cluster_rtol * scale)
    reps = np.array([w[g].mean() for g in groups])
    return SpectralDecomposition(
        eigenvalues=w,
        right=v,
        left=left,
        clusters=tuple(tuple(g) for g in groups),
        representatives=reps,
        residual=residual,
    )


def spectral_radius(m: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(m)), initial=0.0))
