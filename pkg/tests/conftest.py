import numpy as np
import pytest

from cshlab import SystemModel, complete_graph, cycle_graph, path_graph


def manufactured_system(g):
    """System whose sources are built so a known pair is an exact root.

    Both source means are positive, so the degree-zero and max-principle
    facts apply while a root demonstrably exists: a positive control for
    the enumeration and audit machinery.
    """
    u0 = np.array([-1.0, -0.5])
    v0 = np.array([0.3, -0.4])
    m0 = g.neg_laplacian_matrix()
    eu, ev = np.exp(u0), np.exp(v0)
    f = -(m0 @ u0) - ev * (eu - 1.0)
    gg = -(m0 @ v0) - eu * (ev - 1.0)
    return SystemModel(p=0.5, q=0.5, f=f, g=gg), u0, v0


@pytest.fixture
def k2():
    return complete_graph(2)


@pytest.fixture
def p3():
    return path_graph(3)


@pytest.fixture
def p3_weighted():
    return path_graph(3, mu=(1.0, 2.0, 1.0))


@pytest.fixture
def c4():
    return cycle_graph(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
