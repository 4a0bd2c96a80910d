"""Pytest configuration and fixtures."""

from pathlib import Path

import pytest

from sill.birman_schwinger import OneParticleModel
from sill.coexistence import LatticeConstants, lattice_constants, zd_potential
from sill.lattice_model import HoppingCoefficients, standard_laplacian
from sill.two_particle import TwoParticleModel

DATA_DIR = Path(__file__).parent / "data"

# Reference values of the lattice Green constants (high-resolution quadrature).
REFERENCE_A = 0.252731
REFERENCE_C = 0.0860645
REFERENCE_S = 0.104921


@pytest.fixture
def data_dir() -> Path:
    """Directory holding the model files used by the CLI tests."""
    return DATA_DIR


@pytest.fixture
def laplacian() -> HoppingCoefficients:
    """Standard Laplacian 2 * sum(1 - cos p_i)."""
    return standard_laplacian()


@pytest.fixture
def free_model(laplacian: HoppingCoefficients) -> OneParticleModel:
    """Standard Laplacian without interaction."""
    return OneParticleModel.from_hoppings(laplacian, HoppingCoefficients())


@pytest.fixture
def free_pair() -> TwoParticleModel:
    """Two free particles with standard Laplacians."""
    return TwoParticleModel.from_hoppings(
        standard_laplacian(), standard_laplacian(), HoppingCoefficients()
    )


@pytest.fixture
def deep_pair() -> TwoParticleModel:
    """Standard Laplacians with a strong contact attraction (mu = -20, lambda = 0)."""
    return TwoParticleModel.from_hoppings(
        standard_laplacian(), standard_laplacian(), zd_potential(0.0, -20.0)
    )


@pytest.fixture(scope="session")
def reference_constants() -> LatticeConstants:
    """Lattice constants on the default schedule, computed once per session."""
    return lattice_constants((64, 128, 256))
