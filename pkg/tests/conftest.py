import os

import numpy as np
import pytest
from hypothesis import settings

from nrf_forge.dcf import build_dcf, design_gains
from nrf_forge.grid import build_grid_plant, grid_neighborhoods, grid_partition
from nrf_forge.match_synth import AlgorithmConfig, run_algorithm1
from nrf_forge.plant import Plant

settings.register_profile("dev", max_examples=25, deadline=None)
settings.register_profile("ci", max_examples=100, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


def random_stable_plant(rng, n=None, m=None, n_d=None, rho=0.6):
    """Random plant with spectral radius below one and full-rank inputs."""
    n = n if n is not None else int(rng.integers(2, 7))
    m = m if m is not None else int(rng.integers(1, min(n, 4) + 1))
    n_d = n_d if n_d is not None else int(rng.integers(1, 3))
    A = rng.standard_normal((n, n))
    A *= rho / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-6)
    B_u = rng.standard_normal((n, m))
    B_d = rng.standard_normal((n, n_d))
    return Plant(A, B_u, B_d)


def shift_nilpotent(n):
    N = np.zeros((n, n))
    N[:-1, 1:] = np.eye(n - 1)
    return N


def deadbeat_bundle(plant, F=None, grid_size=512):
    """Bundle with zero (or given) feedback and a shift-nilpotent observer pencil."""
    F = F if F is not None else np.zeros((plant.n_u, plant.n_x))
    L = shift_nilpotent(plant.n_x) - plant.A
    F, L = design_gains(plant, None, "user_supplied", F=F, L=L)
    return build_dcf(plant, F, L, grid_size)


@pytest.fixture(scope="session")
def grid_setup():
    plant = build_grid_plant()
    return plant, grid_partition(), grid_neighborhoods()


@pytest.fixture(scope="session")
def grid_design(grid_setup):
    plant, part, nb = grid_setup
    result = run_algorithm1(plant, part, nb, config=AlgorithmConfig(bound_slack=0.25))
    assert not isinstance(result, tuple)
    return result


@pytest.fixture(scope="session")
def two_area_plant():
    """Small strongly-structured plant for closed-loop unit tests."""
    rng = np.random.default_rng(7)
    A = np.array([
        [0.5, 0.1, 0.0, 0.05],
        [0.0, 0.4, 0.1, 0.0],
        [0.1, 0.0, 0.3, 0.1],
        [0.0, 0.05, 0.0, 0.45],
    ])
    B_u = np.array([[1.0, 0.0], [0.2, 0.1], [0.0, 1.0], [0.1, 0.3]])
    B_d = rng.standard_normal((4, 2)) * 0.5
    return Plant(A, B_u, B_d)
