import numpy as np
import pytest

from kpp_speedlab.geometry import make_grid
from kpp_speedlab.model import cosine_flow, logistic


@pytest.fixture
def cos6_256():
    return cosine_flow(make_grid("periodic", 1.0, 256), 6.0)


@pytest.fixture
def kpp():
    return logistic(1.0)


def dense_top_eigenvalue(matrix) -> float:
    """Second, library-independent check used where the Jacobi oracle itself is under test."""
    return float(np.linalg.eigvalsh(np.asarray(matrix))[-1])
