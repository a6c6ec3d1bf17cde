import numpy as np
import pytest

from flrwlab.errors import Breakdown
from flrwlab.fields import I_P, FieldState
from flrwlab.grid import Grid
from flrwlab.identity_lab import DEFAULT_PARAMS, random_state
from flrwlab.initial_data import flrw_state
from flrwlab.reduced_system import (
    assemble_error_terms,
    fluid_matrices,
    fluid_rhs,
    full_rhs,
    principal_gamma,
    slice_geometry,
)


@pytest.mark.parametrize("t", [0.0, 0.7, 3.0])
def test_flrw_is_a_fixed_point(params, t):
    grid = Grid(16)
    s = flrw_state(params, grid, t=t)
    rhs = full_rhs(s, params, grid)
    assert np.max(np.abs(rhs)) < 1e-13


def test_flrw_error_terms_vanish(params, grid16):
    sl = slice_geometry(flrw_state(params, grid16, t=0.4), params, grid16)
    err = assemble_error_terms(sl)
    for name in ("A00", "A0", "Ajk", "D00", "D0", "Djk", "prime", "primej"):
        assert np.max(np.abs(getattr(err, name))) < 1e-13, name
    np.testing.assert_allclose(sl.cache.Gamma_up, principal_gamma(sl), atol=1e-14)


def test_slice_metric_reconstruction():
    state, grid = random_state(3, n=16, amplitude=0.05)
    sl = slice_geometry(state, DEFAULT_PARAMS, grid)
    E2 = sl.E2
    np.testing.assert_allclose(sl.cache.g[1:, 1:], E2 * state.h)
    # d_t g_jk = e^{2 Omega}(k_jk + 2 omega h_jk)
    np.testing.assert_allclose(sl.cache.dg[0, 1:, 1:], E2 * (state.kh + 2 * sl.omega * state.h), rtol=1e-14)
    np.testing.assert_allclose(sl.cache.dg[1, 0, 0], grid.derivative(state.g00, 1), atol=1e-13)


def test_rhs_shape_and_dealias():
    state, grid = random_state(1, n=16, amplitude=0.05)
    g_on = Grid(16, dealias=True)
    rhs = full_rhs(state, DEFAULT_PARAMS, g_on)
    assert rhs.shape == state.data.shape
    np.testing.assert_allclose(g_on.filter(rhs), rhs, atol=1e-15)
    raw = full_rhs(state, DEFAULT_PARAMS, grid)
    np.testing.assert_allclose(g_on.filter(raw), rhs, atol=1e-13)


def test_first_order_metric_rows_are_k():
    state, grid = random_state(2, n=16, amplitude=0.05)
    rhs = full_rhs(state, DEFAULT_PARAMS, grid)
    np.testing.assert_array_equal(rhs[:4], state.data[10:14])
    np.testing.assert_array_equal(rhs[4:10], state.data[14:20])


def test_nonpositive_pressure_is_case_3(params, grid16):
    s = flrw_state(params, grid16, t=0.1)
    d = s.data.copy()
    d[I_P, 2, 3, 4] = -1e-3
    with pytest.raises(Breakdown) as exc:
        full_rhs(FieldState(s.t, d), params, grid16)
    assert exc.value.case == 3


def test_fluid_matrix_inverse():
    state, grid = random_state(4, n=16, amplitude=0.1)
    sl = slice_geometry(state, DEFAULT_PARAMS, grid)
    v = fluid_matrices(sl)
    prod = np.einsum("ab...,bc...->ac...", v.A0_inv, v.A[0])
    for i in range(4):
        for j in range(4):
            assert np.max(np.abs(prod[i, j] - (i == j))) < 1e-12


def test_fluid_rhs_matches_matrix_form():
    state, grid = random_state(5, n=16, amplitude=0.1)
    sl = slice_geometry(state, DEFAULT_PARAMS, grid)
    err = assemble_error_terms(sl)
    v = fluid_matrices(sl, err)
    dP, du = fluid_rhs(sl, err)
    dW = np.concatenate([dP[None], du])
    dxW = np.stack([np.concatenate([sl.dP[c][None], sl.du[c]]) for c in range(3)])
    lhs = np.einsum("ab...,b...->a...", v.A[0], dW) + sum(
        np.einsum("ab...,b...->a...", v.A[1 + c], dxW[c]) for c in range(3)
    )
    np.testing.assert_allclose(lhs, v.b + v.b_delta, atol=1e-12)
