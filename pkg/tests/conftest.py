"""Shared trajectories. The expensive ones are session scoped so that the
unit tests and the acceptance run evolve each of them once."""

import numpy as np
import pytest

from mcflab.flow import StopCriteria, evolve
from mcflab.shapes import circle, icosphere
from mcflab import suites


@pytest.fixture(scope="session")
def circle_to_ceiling():
    """256-vertex unit circle run until max H = 150 (r = 1/150)."""
    return evolve(circle(256), StopCriteria(H_max=150.0), snapshot_stride=20)


@pytest.fixture(scope="session")
def small_circle_flow():
    """Cheap 64-vertex circle flow to t = 0.3."""
    return evolve(circle(64), StopCriteria(max_time=0.3), snapshot_stride=5)


@pytest.fixture(scope="session")
def sphere3_flow():
    """Level-3 unit sphere to t = 0.2 = 0.8 T, every step stored."""
    return evolve(icosphere(3), StopCriteria(max_time=0.2), snapshot_stride=1)


@pytest.fixture(scope="session")
def sphere2_flow():
    return evolve(icosphere(2), StopCriteria(max_time=0.2), snapshot_stride=1)


@pytest.fixture(scope="session")
def moser_window():
    return suites.sphere_moser_window()


@pytest.fixture(scope="session")
def moser_hat(moser_window):
    return suites.hat_series(moser_window.traj, 0.0)


@pytest.fixture(scope="session")
def critical_window():
    return suites.critical_window()


@pytest.fixture(scope="session")
def unit_window():
    return suites.unit_sphere_window()


@pytest.fixture(scope="session")
def pins():
    return suites.load_pins()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def dumbbell_flow():
    """Coarse dumbbell pinched until max H = 8 on the neck."""
    from mcflab.shapes import dumbbell

    return evolve(dumbbell(0.3, 1.0, 40, 16), StopCriteria(H_max=8.0), snapshot_stride=40)
