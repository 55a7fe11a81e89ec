import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reflector_ot.analytic import default_dataset  # noqa: E402


@pytest.fixture(scope="session")
def dataset():
    return default_dataset()


@pytest.fixture(scope="session")
def cfg(dataset):
    return dataset.config


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_cap_directions(rng, n, radius=0.8, rmin=0.0):
    """Directions uniform in planar area over ``rmin <= |mxy| <= radius``."""
    r = np.sqrt(rng.uniform(rmin**2, radius**2, n))
    t = rng.uniform(0.0, 2.0 * np.pi, n)
    mxy = np.column_stack([r * np.cos(t), r * np.sin(t)])
    return np.column_stack([mxy, -np.sqrt(1.0 - r * r)])


def random_disk_points(rng, n, radius=17.0 / 9.0):
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    t = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])
