import numpy as np
import pytest

from ftpl import Box, Stream


@pytest.fixture
def line():
    """The interval [-10, 10] used by the tent examples."""
    return Box([-10.0], [10.0])


@pytest.fixture
def stream():
    return Stream(2024)


def brute_min(objective, box: Box, h: float = 1e-3):
    """Independent reference: dense 1-d grid minimum of a scalar objective."""
    xs = np.linspace(box.lo[0], box.hi[0], int(round((box.hi[0] - box.lo[0]) / h)) + 1)
    vals = np.array([objective(x) for x in xs])
    k = int(np.argmin(vals))
    return xs[k], vals[k]
