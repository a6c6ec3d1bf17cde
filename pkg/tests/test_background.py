import math

import numpy as np
import pytest

from flrwlab.background import (
    BackgroundParams,
    background_at,
    e_folding,
    friedmann_rhs,
    sample_background,
    scale_factor,
)

from conftest import PARAM_SETS, rk4_scale_factor


def test_initial_scale_factor_is_one(params):
    assert scale_factor(params, 0.0) == 1.0
    b = background_at(params, 0.0)
    assert b.Omega == 0.0
    assert b.omega == pytest.approx(math.sqrt(params.Lambda / 3 + params.rho_bar / 3), rel=1e-15)


def test_vacuum_limit_is_de_sitter():
    p = BackgroundParams(Lambda=3.0, cs2=0.2, rho_bar=1e-14)
    for t in (0.5, 2.0, 7.0):
        assert scale_factor(p, t) == pytest.approx(math.exp(p.H * t), rel=1e-9)


@pytest.mark.parametrize("p", PARAM_SETS)
def test_closed_form_matches_rk4(p):
    t_end = 10.0 / p.H
    t, a = rk4_scale_factor(p, t_end, 20000)
    closed = scale_factor(p, t)
    assert np.max(np.abs(closed / a - 1.0)) < 1e-8


def test_friedmann_rhs_values(params):
    assert friedmann_rhs(params, 1.0) == pytest.approx(math.sqrt(params.Lambda / 3 + params.rho_bar / 3))
    s = 10.0 / 3.0
    assert friedmann_rhs(params, 2.0) == pytest.approx(2.0 * math.sqrt(1.0 + 3.0 / (3.0 * 2.0**s)), rel=1e-14)
    big = 1e6
    assert friedmann_rhs(params, big) / (params.H * big) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        friedmann_rhs(params, 0.0)


@pytest.mark.parametrize("p", PARAM_SETS)
def test_state_invariants(p):
    H = p.H
    for t in np.linspace(0, 10 / H, 41):
        b = background_at(p, float(t))
        assert H <= b.omega <= math.sqrt(H**2 + p.rho_bar / 3) + 1e-15
        # 3 omega^2 - Lambda cancels catastrophically once omega ~ H: allow its roundoff
        assert abs((3 * b.omega**2 - p.Lambda) - b.p_tilde / p.cs2) <= 1e-10 * b.p_tilde / p.cs2 + 8e-16 * p.Lambda
        lo = 0.5 ** (2 / p.varsigma) * math.exp(H * t)
        hi = p.amplitude_A * math.exp(H * t)
        assert lo <= b.a * (1 + 1e-14) and b.a <= hi * (1 + 1e-14)


def test_omega_dot_by_finite_differences(params):
    h = 1e-3

    def w(t):
        return background_at(params, t).omega

    for t in (0.3, 1.0, 2.5):
        fd = (-w(t + 2 * h) + 8 * w(t + h) - 8 * w(t - h) + w(t - 2 * h)) / (12 * h)
        assert fd == pytest.approx(background_at(params, t).omega_dot, rel=1e-8)


def test_omega_approaches_H_at_rate_varsigma_H(params):
    t = np.linspace(4.0, 8.0, 30) / params.H
    w = np.array([background_at(params, float(s)).omega for s in t]) - params.H
    slope = np.polyfit(t, np.log(w), 1)[0]
    assert -slope == pytest.approx(params.varsigma * params.H, rel=0.1)
    wd = -np.array([background_at(params, float(s)).omega_dot for s in t])
    slope = np.polyfit(t, np.log(wd), 1)[0]
    assert -slope == pytest.approx(params.varsigma * params.H, rel=0.1)


def test_e_folding_does_not_overflow(params):
    Om = e_folding(params, 1e4)
    assert math.isfinite(Om) and Om > 1e3


def test_derived_constants(params):
    assert params.delta_param == pytest.approx(1 / 3)
    assert params.varsigma == pytest.approx(10 / 3)
    assert params.p_bar == pytest.approx(1 / 3)
    assert params.q == pytest.approx(2 / 9)
    assert params.q <= (2 / 3) * min(params.delta_param, 1 - params.delta_param) + 1e-15
    small = BackgroundParams(3.0, 1 / 9, 3.0, eta_min_proxy=0.1)
    assert small.q == pytest.approx(2 / 30)


@pytest.mark.parametrize(
    "kw",
    [
        dict(Lambda=0.0, cs2=0.1, rho_bar=1.0),
        dict(Lambda=1.0, cs2=0.0, rho_bar=1.0),
        dict(Lambda=1.0, cs2=1 / 3, rho_bar=1.0),
        dict(Lambda=1.0, cs2=0.1, rho_bar=-1.0),
        dict(Lambda=1.0, cs2=0.1, rho_bar=1.0, eta_min_proxy=0.0),
    ],
)
def test_invalid_params_rejected(kw):
    with pytest.raises(ValueError):
        BackgroundParams(**kw)


def test_negative_time_rejected(params):
    with pytest.raises(ValueError):
        background_at(params, -1.0)


def test_sample_table(params):
    tab = sample_background(params, 5.0, 11)
    assert tab.shape == (11, 5)
    assert np.all(np.diff(tab[:, 1]) > 0)
    np.testing.assert_allclose(tab[:, 2], np.log(tab[:, 1]), rtol=1e-14)
