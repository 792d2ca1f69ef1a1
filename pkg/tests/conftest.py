import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import chaoscope as cs


@pytest.fixture(scope="session")
def kot():
    return cs.get_system("kot_monod")


@pytest.fixture(scope="session")
def lin2():
    return cs.get_system("lin2")


@pytest.fixture(scope="session")
def lorenz():
    return cs.get_system("lorenz")


@pytest.fixture(scope="session")
def becks():
    return cs.get_system("becks_dim")


@pytest.fixture(scope="session")
def kot_box(kot):
    return cs.SearchBox((
        cs.BoxCoord("eps", 0.0, 1.0),
        cs.BoxCoord("omega", 0.5, 4.0),
        cs.BoxCoord("x", 0.1, 1.0, "initial_condition"),
        cs.BoxCoord("y", 0.1, 1.0, "initial_condition"),
        cs.BoxCoord("z", 0.1, 1.0, "initial_condition"),
    ))


@pytest.fixture(scope="session")
def fast_lyap():
    """Cheap Lyapunov recipe for walk-heavy tests."""
    return cs.LyapunovConfig(t0_horizon=50.0, dt=0.02, max_doublings=3)


def make_plain_system(system_id, dim, state_names, params, rhs, jac=None,
                      default_state=None, time_dependent=False):
    """Pure-Python SystemDefinition (exercises the non-compiled path)."""
    return cs.SystemDefinition(
        id=system_id,
        dim=dim,
        state_names=tuple(state_names),
        params=tuple(cs.ParamDescriptor(n, float(v)) for n, v in params),
        rhs=rhs,
        jac=jac,
        time_dependent=time_dependent,
        default_state=tuple(default_state or [0.0] * dim),
    )


@pytest.fixture()
def decay1():
    """dY/dt = -rate * Y, closed form Y0 * exp(-rate * t)."""
    return make_plain_system(
        "decay1", 1, ["y"], [("rate", 1.0)],
        rhs=lambda t, y, p: np.array([-p[0] * y[0]]),
        jac=lambda t, y, p: np.array([[-p[0]]]),
        default_state=[1.0],
    )


@pytest.fixture()
def square1():
    """dY/dt = Y^2: finite-time blowup at t = 1/Y0."""
    return make_plain_system(
        "square1", 1, ["y"], [("unused", 0.0)],
        rhs=lambda t, y, p: np.array([y[0] * y[0]]),
        default_state=[1.0],
    )


@pytest.fixture()
def zero3():
    return make_plain_system(
        "zero3", 3, ["x", "y", "z"], [("unused", 0.0)],
        rhs=lambda t, y, p: np.zeros(3),
        default_state=[0.3, -0.2, 0.9],
    )


@pytest.fixture()
def relax1():
    """dY/dt = p - Y: fixed point at Y = p."""
    return make_plain_system(
        "relax1", 1, ["y"], [("p", 0.0)],
        rhs=lambda t, y, p: np.array([p[0] - y[0]]),
        jac=lambda t, y, p: np.array([[-1.0]]),
        default_state=[0.0],
    )
