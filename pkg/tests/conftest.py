import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hdsel.core import dataset_from_arrays
from helpers import ar1_design


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_dataset(seed, n=40, p=8, s=3, sigma=0.5, rho=0.3):
    """A seeded sparse-signal dataset, normalized, with recorded truth."""
    gen = np.random.default_rng(seed)
    x_raw = ar1_design(gen, n, p, rho)
    beta = np.zeros(p)
    if s:
        beta[1:1 + s] = gen.uniform(0.5, 2.0, size=s) * gen.choice((-1, 1), size=s)
    y = x_raw @ beta + sigma * gen.standard_normal(n)
    ds = dataset_from_arrays(x_raw, y)
    return ds, beta * ds.scales


@pytest.fixture
def make_dataset():
    return random_dataset
