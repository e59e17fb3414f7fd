import numpy as np
import pytest

from thermoduct import build_channel_mesh, build_spaces
from thermoduct.material import (
    clamped_boussinesq,
    constant_density,
    make_material,
)


@pytest.fixture(scope="session")
def unit_space():
    """Single-cell unit cube."""
    return build_spaces(build_channel_mesh(1, 1, 1, 1, 1, 1))


@pytest.fixture(scope="session")
def cube_space():
    """Unit cube split 2x2x2."""
    return build_spaces(build_channel_mesh(1, 1, 1, 2, 2, 2))


@pytest.fixture(scope="session")
def small_space():
    """Small channel used by most solver tests."""
    return build_spaces(build_channel_mesh(1, 1, 2, 2, 2, 4))


@pytest.fixture(scope="session")
def unit_model():
    return make_material(nu=1.0, rho0=1.0, cV=1.0, lam=1.0, alpha1=1.0,
                         law=constant_density(1.0))


@pytest.fixture(scope="session")
def boussinesq_model():
    return make_material(nu=1.0, rho0=1.0, cV=1.0, lam=1.0, alpha1=0.1,
                         law=clamped_boussinesq(1.0, alpha_v=0.1))


def linear_field_dofs(space, component, axis):
    """Velocity dof vector with one component equal to a coordinate."""
    u = np.zeros(space.n_velocity)
    u[component * space.n_scalar:(component + 1) * space.n_scalar] = (
        space.q2_nodes[:, axis]
    )
    return u
