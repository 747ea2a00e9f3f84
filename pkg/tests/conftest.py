import numpy as np
import pytest

from mrsed.config import preset
from mrsed.model import CustomFlux, PiecewiseConstant, ProblemKind, ProblemSpec


def linear_flux(speed=1.0):
    """Transport flux ``f(u) = -speed*u`` (waves move towards x = 0)."""
    return CustomFlux(lambda u: -speed * u, lambda u: np.full_like(u, -speed), 1.0)


def advection_problem(u0, speed=1.0, flux=None, t_end=1.0, kind=ProblemKind.A, psi=None):
    return ProblemSpec(1.0, t_end, flux or linear_flux(speed), None,
                       PiecewiseConstant.constant(0.0), psi, u0, kind)


def tv(u):
    return float(np.abs(np.diff(np.append(u, u[0]))).sum())


@pytest.fixture(scope="session")
def ideal_problem():
    return preset("ideal-batch").build_problem()


@pytest.fixture(scope="session")
def flocculated_problem():
    return preset("flocculated-batch").build_problem()
