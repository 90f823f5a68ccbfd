"""Hypothesis strategies shared by the test modules."""
import numpy as np
from hypothesis import strategies as st

from ris_landauer.quantum import random_density_matrix, random_hermitian

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def hermitians(draw, d=2, scale=1.0):
    return random_hermitian(d, np.random.default_rng(draw(seeds)), scale)


@st.composite
def states(draw, d=2):
    rng = np.random.default_rng(draw(seeds))
    rho = random_density_matrix(d, rng)
    # keep away from the faithfulness floor
    rho = 0.98 * rho + 0.02 * np.eye(d) / d
    return rho


@st.composite
def complex_matrices(draw, d=2):
    rng = np.random.default_rng(draw(seeds))
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
