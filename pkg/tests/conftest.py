import numpy as np
import pytest

from hubquench import ChainSpec, PotentialShape


def linear_dimer(interaction: float, v0: float) -> ChainSpec:
    return ChainSpec.half_filled(2, interaction, PotentialShape.linear(), v0)


def chain(n_sites: int, interaction: float, shape: str, v0: float) -> ChainSpec:
    return ChainSpec.half_filled(n_sites, interaction,
                                 PotentialShape.from_name(shape), v0)


def open_chain_levels(n_sites: int, hopping: float = 1.0) -> np.ndarray:
    """Single-particle levels of the open tight-binding chain."""
    k = np.arange(1, n_sites + 1)
    return np.sort(-2.0 * hopping * np.cos(k * np.pi / (n_sites + 1)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
