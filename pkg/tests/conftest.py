import numpy as np
import pytest

from ringcav import CavityParams, experiment_defaults, experiment_thermal
from ringcav.constants import TWO_PI


@pytest.fixture(scope="session")
def paper():
    """Reported operating parameters (C = 12.5, kappa/2pi = 33.6 kHz, ...)."""
    return experiment_defaults()


@pytest.fixture(scope="session")
def thermal():
    return experiment_thermal()


@pytest.fixture(scope="session")
def small():
    """Mild timescale ratio for fast integration tests."""
    kappa = TWO_PI * 100e3
    gamma = TWO_PI * 1e6
    from ringcav import g_from_cooperativity
    return CavityParams(kappa=kappa, kappa_in=0.03 * kappa, kappa_out=0.28 * kappa,
                        gamma=gamma, g=g_from_cooperativity(10.0, kappa, gamma))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240613)
