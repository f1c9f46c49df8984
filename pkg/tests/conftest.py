import numpy as np
import pytest

from pce import lattice as lat
from pce import material as mat
from pce import planewave as pw

# canonical dielectric-sphere crystal: cubic cell, eps contrast 13, fill 0.25
SPHERE_FILL = 0.25
SPHERE_RADIUS = (SPHERE_FILL * 3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)


@pytest.fixture(scope="session")
def cubic():
    return lat.Lattice(np.eye(3))


@pytest.fixture(scope="session")
def cubic_dual(cubic):
    return lat.dual_basis(cubic)


@pytest.fixture(scope="session")
def modes_2pi(cubic_dual):
    return lat.cutoff_modes(cubic_dual, 2 * np.pi)


@pytest.fixture(scope="session")
def modes_6pi(cubic_dual):
    return lat.cutoff_modes(cubic_dual, 6 * np.pi)


@pytest.fixture(scope="session")
def basis_2pi(modes_2pi):
    return pw.FiberBasis(modes_2pi)


@pytest.fixture(scope="session")
def basis_6pi(modes_6pi):
    return pw.FiberBasis(modes_6pi)


def sphere_primitives(eps_in=13.0, mu_in=1.0):
    return [
        mat.GeometryPrimitive(kind="background", eps=1.0, mu=1.0),
        mat.GeometryPrimitive(kind="sphere", eps=eps_in, mu=mu_in,
                              center=np.array([0.5, 0.5, 0.5]),
                              radius=SPHERE_RADIUS),
    ]


@pytest.fixture(scope="session")
def sphere_weights_6pi(cubic, modes_6pi):
    return mat.coefficients_from_primitives(sphere_primitives(), cubic, modes_6pi)


@pytest.fixture(scope="session")
def sphere_weights_2pi(cubic, modes_2pi):
    return mat.coefficients_from_primitives(sphere_primitives(), cubic, modes_2pi)


@pytest.fixture(scope="session")
def sphere_gram_6pi(sphere_weights_6pi, basis_6pi):
    gram = pw.assemble_gram(sphere_weights_6pi, basis_6pi)
    pw.check_definiteness(gram)
    return gram


@pytest.fixture(scope="session")
def sphere_gram_2pi(sphere_weights_2pi, basis_2pi):
    gram = pw.assemble_gram(sphere_weights_2pi, basis_2pi)
    pw.check_definiteness(gram)
    return gram
