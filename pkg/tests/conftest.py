import numpy as np
import pytest

from eqlab.economy import CES, CobbDouglas, Economy
from eqlab.geometry import Box, Chart


@pytest.fixture
def identical_cd():
    return Economy(2, 2, [2.0, 2.0],
                   [CobbDouglas([0.5, 0.5]), CobbDouglas([0.5, 0.5])])


@pytest.fixture
def heterogeneous_cd():
    return Economy(2, 2, [2.0, 2.0],
                   [CobbDouglas([0.6, 0.4]), CobbDouglas([0.4, 0.6])])


@pytest.fixture
def mirror_ces():
    return Economy(2, 2, [1.0, 1.0],
                   [CES([1024.0, 1.0], -4.0), CES([1.0, 1024.0], -4.0)])


@pytest.fixture
def cd3():
    # three goods, identical shares; equilibrium price is closed-form
    return Economy(3, 2, [1.0, 2.0, 4.0],
                   [CobbDouglas([0.2, 0.3, 0.5]), CobbDouglas([0.2, 0.3, 0.5])])


@pytest.fixture
def cylinder_chart():
    return Chart(map=lambda u: np.array([np.cos(u[0]), np.sin(u[0]), u[1]]),
                 domain=Box([-1.0, -1.0], [7.0, 2.0]), n=2, k=1, name="cylinder")


@pytest.fixture
def sphere_chart():
    def sphere(u):
        theta, phi = u
        return np.array([np.sin(theta) * np.cos(phi),
                         np.sin(theta) * np.sin(phi),
                         np.cos(theta)])

    return Chart(map=sphere, domain=Box([0.2, -7.0], [3.0, 7.0]), n=2, k=1, name="sphere")


@pytest.fixture
def plane_chart():
    return Chart(map=lambda u: np.array([u[0], u[1], 0.0]),
                 domain=Box([-2.0, -2.0], [2.0, 2.0]), n=2, k=1,
                 name="plane", dual_safe=True, affine=True)
