import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from splatshade import available_backends, precompute_brdf_lut


def pytest_generate_tests(metafunc):
    if "backend" in metafunc.fixturenames:
        metafunc.parametrize("backend", list(available_backends()))


@pytest.fixture(scope="session")
def lut():
    # well-converged table shared across the suite
    return precompute_brdf_lut(64, 4096, seed=0)


@pytest.fixture(scope="session")
def lut_fast():
    return precompute_brdf_lut(32, 512, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
