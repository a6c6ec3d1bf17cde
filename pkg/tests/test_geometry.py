import math

import numpy as np
import pytest

from flrwlab.background import background_at
from flrwlab.errors import Breakdown
from flrwlab.geometry import (
    GeometricData,
    build_cache,
    christoffels,
    constraint_residuals,
    four_velocity_complete,
    gauge_residual,
    invert_metric,
    lu_inverse,
    matter_sources,
    slice_data,
    stress_energy,
)
from flrwlab.grid import Grid
from flrwlab.initial_data import flrw_geometric_data

from helpers import random_metric


def _eye4(grid, diag):
    g = np.zeros((4, 4) + grid.shape)
    for m, v in enumerate(diag):
        g[m, m] = v
    return g


def test_inverse_of_flrw_metric(grid16):
    E2 = math.exp(2 * 0.7)
    ginv, G_inv, d2 = invert_metric(_eye4(grid16, (-1, E2, E2, E2)))
    np.testing.assert_allclose(ginv[0, 0], -1.0)
    np.testing.assert_allclose(ginv[2, 2], 1 / E2, rtol=1e-15)
    assert np.max(np.abs(d2)) == 0


def test_inverse_with_shift(grid16):
    g = _eye4(grid16, (-1, 1, 1, 1))
    g[0, 1] = g[1, 0] = 0.1
    ginv, _, _ = invert_metric(g)
    np.testing.assert_allclose(ginv[0, 0], 1 / (-1 - 0.01), rtol=1e-14)
    np.testing.assert_allclose(ginv, lu_inverse(g), atol=1e-14)


def test_inverse_block_formulas_and_lu(grid16, rng):
    g, _ = random_metric(grid16, rng, eps=0.2)
    ginv, G_inv, d2 = invert_metric(g)
    np.testing.assert_allclose(ginv, lu_inverse(g), rtol=1e-12, atol=1e-13)
    eye = np.einsum("ma...,an...->mn...", ginv, g)
    for m in range(4):
        for n in range(4):
            assert np.max(np.abs(eye[m, n] - (m == n))) < 1e-12
    np.testing.assert_allclose(ginv[0, 0], 1 / (g[0, 0] - d2), rtol=1e-12)
    g0_up = np.einsum("aj...,a...->j...", G_inv, g[0, 1:]) / (d2 - g[0, 0])
    np.testing.assert_allclose(ginv[0, 1:], g0_up, rtol=1e-12, atol=1e-14)


def test_signature_breakdowns(grid16):
    g = _eye4(grid16, (-1, 1, 1, 1))
    g[0, 0, 3, 4, 5] = 0.2
    with pytest.raises(Breakdown) as exc:
        invert_metric(g)
    assert exc.value.case == 1 and exc.value.location == (3, 4, 5)
    g = _eye4(grid16, (-1, 1, 1, 1))
    g[2, 2, 1, 1, 1] = -0.5
    with pytest.raises(Breakdown) as exc:
        invert_metric(g)
    assert exc.value.case == 2 and exc.value.location == (1, 1, 1)


def test_flrw_christoffels(grid16, params):
    b = background_at(params, 0.8)
    a2 = b.a**2
    g = _eye4(grid16, (-1, a2, a2, a2))
    dg = np.zeros((4,) + g.shape)
    for j in range(1, 4):
        dg[0, j, j] = 2 * b.omega * a2
    ginv, _, _ = invert_metric(g)
    low, up, contr = christoffels(ginv, dg)
    expected = np.zeros((4, 4, 4))
    for j in range(1, 4):
        expected[0, j, j] = b.a * (b.a * b.omega)  # a a-dot
        expected[j, j, 0] = expected[j, 0, j] = b.omega
    np.testing.assert_allclose(up[..., 0, 0, 0], expected, rtol=1e-13, atol=1e-14)
    assert np.max(np.abs(up - up[..., :1, :1, :1])) < 1e-12
    Q_low, _ = gauge_residual(g, contr, b.omega)
    assert np.max(np.abs(Q_low)) < 1e-13


def test_flat_static_christoffels_vanish(grid16):
    g = _eye4(grid16, (-1, 1, 1, 1))
    ginv, _, _ = invert_metric(g)
    low, up, contr = christoffels(ginv, np.zeros((4,) + g.shape))
    assert not np.any(low) and not np.any(up) and not np.any(contr)


def test_christoffel_symmetry_and_independent_form(grid16, rng):
    g, dg = random_metric(grid16, rng)
    ginv, _, _ = invert_metric(g)
    low, up, contr = christoffels(ginv, dg)
    # lowered index in the middle: low[a, b, c] = g_{b l} Gamma^l_{ac}
    np.testing.assert_allclose(low, np.einsum("bl...,lac...->abc...", g, up), atol=1e-14)
    # metric compatibility: d_a g_{mn} = g_{mb} Gamma^b_{an} + g_{nb} Gamma^b_{am}
    compat = np.einsum("mb...,ban...->amn...", g, up) + np.einsum("nb...,bam...->amn...", g, up)
    np.testing.assert_allclose(compat, dg, atol=1e-13)
    # second transcription: Gamma^a_{mn} = 1/2 g^{al}(d_m g_{ln} + d_n g_{lm} - d_l g_{mn})
    alt = np.zeros_like(up)
    for a in range(4):
        for m in range(4):
            for n in range(4):
                alt[a, m, n] = 0.5 * sum(ginv[a, l] * (dg[m, l, n] + dg[n, l, m] - dg[l, m, n]) for l in range(4))
    np.testing.assert_allclose(up, alt, atol=1e-14)
    np.testing.assert_allclose(contr, np.einsum("mn...,amn...->a...", ginv, alt), atol=1e-14)


def test_four_velocity(grid16, rng):
    g = _eye4(grid16, (-1, 1, 1, 1))
    ginv, _, _ = invert_metric(g)
    u_up, u_low, _ = four_velocity_complete(g, ginv, grid16.zeros(3))
    np.testing.assert_array_equal(u_up[0], 1.0)
    np.testing.assert_array_equal(u_low[0], -1.0)

    g, _ = random_metric(grid16, rng, eps=0.2)
    ginv, _, _ = invert_metric(g)
    u = np.stack([grid16.random_field(rng, 2, 0.3) for _ in range(3)])
    u_up, u_low, Pi = four_velocity_complete(g, ginv, u)
    norm = np.einsum("mn...,m...,n...->...", g, u_up, u_up)
    assert np.max(np.abs(norm + 1)) < 1e-12 and np.all(u_up[0] > 0)
    # quadratic-root oracle: g00 x^2 + 2 (g0a u^a) x + g_ab u^a u^b + 1 = 0
    A, B = g[0, 0], np.einsum("a...,a...->...", g[0, 1:], u)
    C = np.einsum("ab...,a...,b...->...", g[1:, 1:], u, u) + 1
    roots = (-B - np.sqrt(B * B - A * C)) / A
    np.testing.assert_allclose(u_up[0], roots, rtol=1e-12)
    assert np.max(np.abs(np.einsum("ma...,a...->m...", Pi, u_low))) < 1e-12
    PgP = np.einsum("ma...,ab...,bn...->mn...", Pi, g, Pi)
    np.testing.assert_allclose(PgP, Pi, rtol=1e-10, atol=1e-12)


def test_u0_minus_one_is_quadratic(grid16):
    e2 = math.exp(2 * 0.3)
    g = _eye4(grid16, (-1, e2, e2, e2))
    ginv, _, _ = invert_metric(g)
    vals = []
    for s in (1e-2, 5e-3):
        u = np.zeros((3,) + grid16.shape)
        u[0] = s
        vals.append(float(four_velocity_complete(g, ginv, u)[0][0].max()) - 1)
    assert vals[0] / vals[1] == pytest.approx(4.0, rel=1e-3)


def test_normalization_breakdown(grid16):
    # unreachable for an admissible metric; feed an indefinite spatial block directly
    g = _eye4(grid16, (-1, -1, 1, 1))
    ginv = np.zeros_like(g)
    u = grid16.zeros(3)
    u[0] = 10.0
    with pytest.raises(Breakdown) as exc:
        four_velocity_complete(g, ginv, u)
    assert exc.value.case == 4


def test_stress_energy(grid16, rng, params):
    g = _eye4(grid16, (-1, 1, 1, 1))
    p = np.full(grid16.shape, params.p_bar)
    u_low = np.zeros((4,) + grid16.shape)
    u_low[0] = -1
    T = stress_energy(g, p, u_low, params.cs2)
    np.testing.assert_allclose(T[0, 0], params.rho_bar)
    assert not np.any(T[0, 1:])
    g, _ = random_metric(grid16, rng)
    ginv, _, _ = invert_metric(g)
    u_up, u_low, _ = four_velocity_complete(g, ginv, np.stack([grid16.random_field(rng, 2, 0.1) for _ in range(3)]))
    p = params.p_bar * (1 + grid16.random_field(rng, 2, 0.1))
    T = stress_energy(g, p, u_low, params.cs2)
    rho = p / params.cs2
    np.testing.assert_allclose(np.einsum("mn...,mn...->...", ginv, T), 3 * p - rho, rtol=1e-12)
    with pytest.raises(Breakdown) as exc:
        stress_energy(g, -p, u_low, params.cs2)
    assert exc.value.case == 3


def test_build_cache_flrw_gauge(grid16, params):
    b = background_at(params, 0.0)
    g = _eye4(grid16, (-1, 1, 1, 1))
    dg = np.zeros((4,) + g.shape)
    for j in range(1, 4):
        dg[0, j, j] = 2 * b.omega
    c = build_cache(g, dg, grid16.zeros(3), b.omega, np.full(grid16.shape, params.p_bar), params.cs2)
    assert np.max(np.abs(c.Q_low)) < 1e-14


def test_flrw_constraints_vanish(grid16, params):
    data = flrw_geometric_data(params, grid16)
    gauss, codazzi = constraint_residuals(data, grid16, params.Lambda, params.cs2)
    assert np.max(np.abs(gauss)) < 1e-12
    assert np.max(np.abs(codazzi)) == 0


def test_static_data_gauss_is_minus_two_T00(grid16, params):
    eye = np.zeros((3, 3) + grid16.shape)
    for j in range(3):
        eye[j, j] = 1
    p = np.full(grid16.shape, 0.2)
    data = GeometricData(g=eye, K=np.zeros_like(eye), p=p, u=grid16.zeros(3))
    gauss, codazzi = constraint_residuals(data, grid16, params.Lambda, params.cs2)
    T00, _ = matter_sources(data, params.cs2)
    np.testing.assert_allclose(gauss, -2 * T00 - 2 * params.Lambda, rtol=1e-14)
    assert np.max(np.abs(codazzi)) == 0


def test_conformally_flat_scalar_curvature():
    # g = e^{2 phi} delta in 3D: R = -e^{-2 phi} (4 lap phi + 2 |grad phi|^2)
    grid = Grid(32)
    x1, x2, _ = grid.coords
    phi = 0.1 * np.sin(x1) * np.cos(x2)
    eye = np.zeros((3, 3) + grid.shape)
    for j in range(3):
        eye[j, j] = np.exp(2 * phi)
    from flrwlab.geometry import scalar_curvature, sym3_inverse

    inv, _ = sym3_inverse(eye)
    R = scalar_curvature(grid, eye, inv)
    gphi = grid.gradient(phi)
    lap = sum(grid.derivative(gphi[a], a + 1) for a in range(3))
    expected = -np.exp(-2 * phi) * (4 * lap + 2 * np.sum(gphi**2, axis=0))
    np.testing.assert_allclose(R, expected, atol=1e-11)


def test_geometric_data_validation(grid16):
    eye = np.zeros((3, 3) + grid16.shape)
    for j in range(3):
        eye[j, j] = 1
    bad = eye.copy()
    bad[1, 1, 0, 0, 0] = -1
    with pytest.raises(ValueError):
        GeometricData(g=bad, K=eye, p=np.ones(grid16.shape), u=grid16.zeros(3))
    with pytest.raises(ValueError):
        GeometricData(g=eye, K=eye, p=np.zeros(grid16.shape), u=grid16.zeros(3))


def test_slice_data_recovers_flrw(grid16, params):
    b = background_at(params, 0.0)
    g = _eye4(grid16, (-1, 1, 1, 1))
    dg = np.zeros((4,) + g.shape)
    for j in range(1, 4):
        dg[0, j, j] = 2 * b.omega
    p = np.full(grid16.shape, params.p_bar)
    c = build_cache(g, dg, grid16.zeros(3), b.omega, p, params.cs2)
    data, src = slice_data(c, grid16, p, params.cs2)
    np.testing.assert_allclose(data.K[0, 0], b.omega)
    np.testing.assert_allclose(src[0], params.rho_bar, rtol=1e-14)
    gauss, codazzi = constraint_residuals(data, grid16, params.Lambda, params.cs2, src)
    assert np.max(np.abs(gauss)) < 1e-12 and np.max(np.abs(codazzi)) < 1e-14
