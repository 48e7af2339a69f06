import numpy as np
import pytest

from cellbeam import SolverSettings, SystemConfig, sample_channels


@pytest.fixture
def small_config():
    return SystemConfig(n_antennas=4, n_users=3, epsilon=0.5, sigma2=1.0,
                        power=10.0, seed=1234)


@pytest.fixture
def small_channels(small_config):
    return sample_channels(small_config, 0)


@pytest.fixture
def fast_settings():
    # loose targets keep the slow bisection tests quick without touching
    # the default contracts exercised elsewhere
    return SolverSettings(tolerance=1e-9, mu_tolerance=1e-2, gamma_tolerance=1e-3)


def scalar_channelset(a, c, b, d):
    """K=1, N=1 channel set: own gains a (cell 1) and d (cell 2), cross c
    (BS 1 to the cell-2 user) and b (BS 2 to the cell-1 user)."""
    from cellbeam import ChannelSet
    blocks = np.zeros((2, 2, 1, 1), dtype=complex)
    blocks[0, 0, 0, 0] = a
    blocks[1, 0, 0, 0] = c
    blocks[0, 1, 0, 0] = b
    blocks[1, 1, 0, 0] = d
    return ChannelSet(blocks=blocks)
