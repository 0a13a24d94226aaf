import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from softtree.synth import make_separable, make_tabular


def n_jobs_for_tests() -> int:
    return min(2, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def jobs():
    return n_jobs_for_tests()


@pytest.fixture(scope="session")
def small_noisy():
    """300-row noisy two-class set with categorical and numeric signal."""
    return make_tabular(300, 4, 4, 2, informative_numeric=2,
                        informative_categorical=2, class_sep=1.2,
                        cat_sharpness=0.4, label_noise=0.15, seed=42)


@pytest.fixture(scope="session")
def separable():
    return make_separable(80, n_features=3, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
