import numpy as np
import pytest

from sketchmf import ingest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def convdiff8():
    """Small convection-diffusion operator (N=64) used all over the suite."""
    return ingest.gen_convection_diffusion(8, 1e-2)


def random_positive_real(rng, n, spread=3.0, skew=0.3):
    """Dense matrix with positive-definite Hermitian part.

    Diagonal dominates a mild random perturbation, so the spectrum stays
    in the right half plane and inv-sqrt is well defined.
    """
    d = rng.uniform(1.0, 1.0 + spread, size=n)
    a = np.diag(d) + skew * rng.standard_normal((n, n)) / np.sqrt(n)
    return a
