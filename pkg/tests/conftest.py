import math

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def haar_unitary(rng, dim=2):
    """Haar-distributed unitary via QR of a complex Gaussian with phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_pure_qubit(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)
