"""Numerical tolerances shared by every module.

All thresholds live in one frozen record so that a run can be reproduced by
recording a single object.  Modules take an optional ``tol`` argument and fall
back to :data:`DEFAULT`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # linear algebra kernels
    hermitian: float = 1e-12
    unitary: float = 1e-10
    cluster_rtol: float = 1e-8
    reconstruction: float = 1e-9
    # states
    faithful_floor: float = 1e-12
    trace: float = 1e-12
    positivity: float = 1e-12
    # channels
    cptp: float = 1e-10
    peripheral: float = 1e-9
    peripheral_margin: float = 1e-6
    # peripheral moduli further than this from 1 are only numerically peripheral
    peripheral_roundoff: float = 1e-12
    projector_identity: float = 1e-9
    # induced 1->1 norm estimator
    norm_restarts: int = 32
    norm_max_iter: int = 200
    norm_rtol: float = 1e-12
    # find_m
    m_cap: int = 100_000
    # adiabatic construction
    series_switch: float = 0.3
    series_rtol: float = 1e-14
    # perturbation theory
    level_merge: float = 1e-10
    fd_step: float = 1e-3

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT = Tolerances()
