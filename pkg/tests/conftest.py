import numpy as np
import pytest

from scattergate.core import EmitterParams, PulseParams
from scattergate.protocol import ChannelConfig


@pytest.fixture
def reference_emitter() -> EmitterParams:
    return EmitterParams.from_total_rate(2.48, 14.7, gamma_dephase=0.092,
                                         kappa_flip=0.021, t2_star=23.2)


@pytest.fixture
def reference_pulse() -> PulseParams:
    return PulseParams.from_duration(2.0, sigma_e=0.3, n_bar=0.0732)


@pytest.fixture
def all_channels() -> ChannelConfig:
    return ChannelConfig(enable_pure_dephasing=True, enable_spin_flip=True,
                         enable_driving_dephasing=True,
                         enable_readout_error=True)


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish random density matrix via a Ginibre draw."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
