import numpy as np
import pytest

from flrwlab.background import background_at
from flrwlab.fields import FIELD_NAMES, NCOMP, FieldState, sym_full, sym_pack
from flrwlab.geometry import GeometricData, constraint_residuals
from flrwlab.initial_data import (
    PerturbationSpec,
    flrw_geometric_data,
    flrw_state,
    from_geometric_data,
    perturbed_data,
)
from flrwlab.reduced_system import slice_geometry


def test_field_layout(grid16, rng):
    assert len(FIELD_NAMES) == NCOMP == 24
    h = rng.standard_normal((3, 3) + grid16.shape)
    h = h + h.transpose(1, 0, 2, 3, 4)
    np.testing.assert_array_equal(sym_full(sym_pack(h)), h)
    with pytest.raises(ValueError):
        FieldState(0.0, np.zeros((23, 4, 4, 4)))


def test_flrw_state(params, grid16):
    s = flrw_state(params, grid16)
    assert np.all(s.g00 == -1) and not np.any(s.g0) and not np.any(s.k00)
    np.testing.assert_array_equal(s.h[1, 1], 1.0)
    assert not np.any(s.h[0, 1])
    np.testing.assert_array_equal(s.P, params.p_bar)
    assert not np.any(s.u) and not np.any(s.kh)
    Q = slice_geometry(s, params, grid16).cache.Q_low
    assert np.max(np.abs(Q)) < 1e-14


def test_from_flrw_geometric_data_is_flrw_state(params, grid16):
    a = from_geometric_data(flrw_geometric_data(params, grid16), params, grid16)
    b = flrw_state(params, grid16)
    np.testing.assert_allclose(a.data, b.data, atol=1e-15)


def test_single_mode_hand_oracle(params, grid16):
    eps = 0.05
    x1 = grid16.coords[0]
    s = eps * np.sin(x1)
    data = flrw_geometric_data(params, grid16)
    g = data.g.copy()
    g[1, 2] = g[2, 1] = s
    data = GeometricData(g=g, K=data.K, p=data.p, u=data.u)
    st = from_geometric_data(data, params, grid16)
    w0 = background_at(params, 0.0).omega
    np.testing.assert_allclose(st.k0[0], eps * np.cos(x1) * s / (1 - s * s), atol=1e-14)
    assert np.max(np.abs(st.k0[1:])) < 1e-14
    np.testing.assert_allclose(st.k00, 2 * (3 * w0 - w0 * (1 + 2 / (1 - s * s))), atol=1e-13)
    np.testing.assert_allclose(st.h[1, 2], s)


@pytest.mark.parametrize("seed", range(3))
def test_wave_coordinates_at_t0(params, grid16, seed):
    spec = PerturbationSpec(amplitude=1e-2, kmax=2, seed=seed)
    st = from_geometric_data(perturbed_data(spec, params, grid16), params, grid16)
    Q = slice_geometry(st, params, grid16).cache.Q_low
    assert np.max(np.abs(Q)) < 1e-12


def test_perturbations_deterministic_and_scaled(params, grid16):
    spec = PerturbationSpec(amplitude=1e-3, kmax=2, seed=7)
    a = perturbed_data(spec, params, grid16)
    b = perturbed_data(spec, params, grid16)
    for x, y in zip((a.g, a.K, a.p, a.u), (b.g, b.K, b.p, b.u)):
        assert np.array_equal(x, y)
    base = flrw_geometric_data(params, grid16)
    assert np.max(np.abs(a.g - base.g)) == pytest.approx(1e-3)
    np.testing.assert_allclose(a.g, np.swapaxes(a.g, 0, 1))
    zero = perturbed_data(PerturbationSpec(0.0), params, grid16)
    assert np.array_equal(zero.g, base.g) and np.array_equal(zero.K, base.K)


def test_targets_select_fields(params, grid16):
    only_u = perturbed_data(PerturbationSpec(1e-3, targets=("u",), seed=1), params, grid16)
    base = flrw_geometric_data(params, grid16)
    assert np.array_equal(only_u.g, base.g) and np.array_equal(only_u.p, base.p)
    full = perturbed_data(PerturbationSpec(1e-3, seed=1), params, grid16)
    assert np.array_equal(only_u.u, full.u)


def test_constraint_residual_is_linear_in_eps(params, grid16):
    norms = []
    for eps in (1e-4, 2e-4):
        d = perturbed_data(PerturbationSpec(eps, seed=3), params, grid16)
        gauss, codazzi = constraint_residuals(d, grid16, params.Lambda, params.cs2)
        norms.append(grid16.l2_norm(gauss) + grid16.l2_norm(codazzi))
    assert norms[1] / norms[0] == pytest.approx(2.0, rel=1e-3)


@pytest.mark.parametrize(
    "kw", [dict(amplitude=-1.0), dict(amplitude=1.0, kmax=0), dict(amplitude=1.0, targets=("x",))]
)
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        PerturbationSpec(**kw)


def test_kmax_above_quarter_grid(params, grid16):
    with pytest.raises(ValueError):
        perturbed_data(PerturbationSpec(1e-3, kmax=5), params, grid16)
