import numpy as np
import pytest

from nuvbinary.model import LtiModel


@pytest.fixture
def integrator():
    return LtiModel([[1.0]], [1.0], [[1.0]])


def random_model(rng, N, L, radius=0.9):
    A = rng.normal(size=(N, N))
    A *= radius / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-12)
    return LtiModel(A, rng.normal(size=N), rng.normal(size=(L, N)),
                    d=rng.normal(size=N) * 0.1, x0=rng.normal(size=N))
