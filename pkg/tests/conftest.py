import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def dense_ladder(dim: int) -> np.ndarray:
    """Truncated annihilation operator, the building block of the expm oracles."""
    return np.diag(np.sqrt(np.arange(1, dim)), 1)
