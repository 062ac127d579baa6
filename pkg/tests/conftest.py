import numpy as np
import pytest

from nlkpp import (KernelProfile, build_uniform_grid, sample_convolution_kernel,
                   symmetrize_and_normalize)


@pytest.fixture(scope="session")
def unit_grid():
    """[0, 1] with 128 nodes, the workhorse grid of the suite."""
    return build_uniform_grid((0.0, 1.0), 128)


@pytest.fixture(scope="session")
def balanced_gaussian(unit_grid):
    profile = KernelProfile("gaussian", 0.2)
    return symmetrize_and_normalize(sample_convolution_kernel(profile, unit_grid))


@pytest.fixture(scope="session")
def balanced_tophat(unit_grid):
    profile = KernelProfile("tophat", 0.2)
    return symmetrize_and_normalize(sample_convolution_kernel(profile, unit_grid))


@pytest.fixture
def rng():
    return np.random.default_rng(20240)
