"""Shared model builders for the test modules."""
import time
from contextlib import contextmanager

import numpy as np

from ris_landauer import channel as ch
from ris_landauer import models as mo
from ris_landauer.quantum import gibbs_state
from ris_landauer.simulate import RISSchedule

E, E0, TAU = 1.0, 0.8, 0.5
M_RW, M_FD = 603, 47


def qubit_channel(kind, E, E0, lam, tau, beta, u1=1.0):
    m = mo.QubitModel(kind, E, u1)
    return ch.reduced_dynamics(m.h_S, m.h_E(E0), m.v, lam, tau, gibbs_state(m.h_E(E0), beta))


def random_qubit_channel(seed, kind=None):
    rng = np.random.default_rng(seed)
    kind = kind or ("qubit_rw", "qubit_fd")[rng.integers(2)]
    return qubit_channel(kind, rng.uniform(0.3, 2), rng.uniform(0.3, 2), rng.uniform(0.1, 2),
                         rng.uniform(0.1, 2), rng.uniform(0.1, 3))


def flip_channel():
    """Classical bit flip that erases coherences: peripheral spectrum {1, -1}."""
    e0, e1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    return ch.from_function(lambda x: x[0, 0] * e1 + x[1, 1] * e0, 2)


def qubit_schedule(kind, lam, T, m=1, beta=lambda s: 1.0 + s, E=E, E0=E0, tau=TAU, u1=1.0):
    model = mo.QubitModel(kind, E, u1)
    h_E = model.h_E(E0)
    v = model.v
    return RISSchedule(model.h_S, lambda s: h_E, beta, lambda s: v, lam, tau, T, m)


def contains(found, expected, atol):
    return all(np.min(np.abs(np.asarray(found) - e)) <= atol for e in expected)


# acceptance bookkeeping: one verdict line per criterion in the terminal summary

CRITERIA: dict[int, list[tuple[str, bool, float, str]]] = {}


@contextmanager
def criterion(number, label, budget, setup=0.0):
    """Record PASS/FAIL for one part of an acceptance criterion, including its wall-clock budget.

    ``setup`` adds time already spent in shared fixtures.
    """
    note = {"detail": ""}
    t0 = time.perf_counter() - setup
    try:
        yield note
    except BaseException:
        CRITERIA.setdefault(number, []).append((label, False, time.perf_counter() - t0, note["detail"]))
        raise
    elapsed = time.perf_counter() - t0
    ok = elapsed < budget
    if not ok:
        note["detail"] += f" over budget ({budget:g} s)"
    CRITERIA.setdefault(number, []).append((label, ok, elapsed, note["detail"]))
    assert ok, f"criterion {number} took {elapsed:.1f} s, budget {budget:g} s"
