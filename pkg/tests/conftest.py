import numpy as np
import pytest

from flrwlab.background import BackgroundParams
from flrwlab.grid import Grid

PARAM_SETS = [
    BackgroundParams(Lambda=3.0, cs2=1.0 / 9.0, rho_bar=3.0),
    BackgroundParams(Lambda=1.0, cs2=0.2, rho_bar=0.3),
    BackgroundParams(Lambda=3.0, cs2=0.3, rho_bar=1.0),
]


def rk4_scale_factor(params, t_end, steps):
    """Independent RK4 integration of a' = a sqrt(Lambda/3 + rho_bar / (3 a^s))."""
    s = 3.0 * (1.0 + params.cs2)

    def f(a):
        return a * np.sqrt(params.Lambda / 3.0 + params.rho_bar / (3.0 * a**s))

    h = t_end / steps
    a = 1.0
    out = [a]
    for _ in range(steps):
        k1 = f(a)
        k2 = f(a + 0.5 * h * k1)
        k3 = f(a + 0.5 * h * k2)
        k4 = f(a + h * k3)
        a += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(a)
    return np.linspace(0.0, t_end, steps + 1), np.array(out)


@pytest.fixture
def params():
    return PARAM_SETS[0]


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
