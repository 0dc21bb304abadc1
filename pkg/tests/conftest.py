# Standard Library
import os
import sys
from pathlib import Path

# Third Party
import numpy as np
import pytest
from hypothesis import settings

# Keep log output quiet unless a test asks for it
os.environ.setdefault("POWERTOOLS_LOG_LEVEL", "WARNING")

# Local
from eqlab.rng import make_rng
from eqlab.matrixkit import SIGMA_Z
from eqlab.dynamics import TimeAverageConvention
from eqlab.equilibration import reimann_counterexample
from eqlab.spectral import (
    local_sum,
    random_hamiltonian,
    from_eigendecomposition,
)

settings.register_profile("eqlab", max_examples=25, deadline=None)
settings.load_profile("eqlab")


def pytest_configure(config):
    """
    Configure pytest to add the package directory to sys.path for module
    imports. This allows importing eqlab in tests without installing it.
    """
    # Get the absolute path to the project root
    project_root = Path(__file__).parent.parent

    # Add the package source directory to sys.path
    src_path = project_root / "src" / "equilibration-lab"
    if str(src_path) not in sys.path:
        sys.path.insert(0, str(src_path))

    return config


@pytest.fixture
def rng():
    """Seeded generator for tests that draw their own data."""
    return make_rng(20240601)


@pytest.fixture
def four_level():
    """Diagonal Hamiltonian with energies {0, 1.1, 2.3, 3.6}.

    All non-trivial gaps differ, so the gap check passes.
    """
    return from_eigendecomposition([0.0, 1.1, 2.3, 3.6], np.eye(4))


@pytest.fixture
def product_hamiltonian():
    """``sigma_z (x) I + I (x) diag(0, 1)``, whose gaps repeat."""
    return local_sum(SIGMA_Z, np.diag([0.0, 1.0]))


@pytest.fixture
def gue8():
    return random_hamiltonian(8, "gue", seed=11)


@pytest.fixture
def counterexample():
    return reimann_counterexample(5)


@pytest.fixture
def short_convention():
    """Factory for a fast time-average convention on a Hamiltonian."""

    def build(H, n_samples=400, seed=3):
        return TimeAverageConvention.default_for(H, n_samples, seed)

    return build
