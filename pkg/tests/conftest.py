import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gazeinterp.backend import TemplateProvider  # noqa: E402
from gazeinterp.signal import GazeTrace  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
DEMO = Path(__file__).parents[1] / "src" / "gazeinterp" / "assets" / "demo"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def demo():
    return DEMO


@pytest.fixture
def template():
    return TemplateProvider()


def random_trace(rng, n=None, rate=100.0):
    n = n or int(rng.integers(2, 2000))
    dt = rng.uniform(0.5, 1.5, size=n) / rate
    t = np.cumsum(dt) + rng.uniform(-5, 5)
    yaw = np.cumsum(rng.normal(0, 0.8, size=n))
    pitch = np.cumsum(rng.normal(0, 0.8, size=n))
    return GazeTrace(t, yaw, pitch)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
