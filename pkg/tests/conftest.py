import numpy as np
import pytest

from semiq.geometries import make_cpn, make_flat, make_flat_torsion


@pytest.fixture(scope="session")
def flat1():
    return make_flat(1)

@pytest.fixture(scope="session")
def flat2():
    return make_flat(2)

@pytest.fixture(scope="session")
def cpn1():
    return make_cpn(1)

@pytest.fixture(scope="session")
def cpn2():
    return make_cpn(2)

@pytest.fixture(scope="session")
def torsion2():
    return make_flat_torsion()


def sample(G, count, seed):
    return [tuple(p) for p in G.sample_points(count, seed)]


def maxabs(x) -> float:
    return float(np.max(np.abs(np.asarray(x))))
