import math

import numpy as np
import pytest

from flrwlab.identity_lab import (
    ALL_CHECKS,
    DEFAULT_PARAMS,
    EXTRA_CHECKS,
    POINTWISE_CHECKS,
    IdentityReport,
    check_eov_u0,
    flrw_slice,
    random_state,
    run_checks,
    run_firewall,
)
from flrwlab.reduced_system import slice_geometry

SEEDS = (0, 1, 2)


def test_seven_checks():
    assert len(ALL_CHECKS) == 7
    assert "eov_u0" in ALL_CHECKS


@pytest.mark.parametrize("name", sorted({**POINTWISE_CHECKS, **EXTRA_CHECKS}))
def test_pointwise_checks_pass_and_mutations_fail(name):
    fn = {**POINTWISE_CHECKS, **EXTRA_CHECKS}[name]
    for seed in SEEDS:
        state, grid = random_state(seed)
        sl = slice_geometry(state, DEFAULT_PARAMS, grid)
        ok = fn(sl, seed=seed)
        bad = fn(sl, seed=seed, mutate=True)
        assert ok.passed, ok.row()
        assert not bad.passed, bad.row()
        assert bad.residual > 1e3 * max(ok.residual, 1e-16)


@pytest.mark.parametrize("name", sorted({**POINTWISE_CHECKS, **EXTRA_CHECKS}))
def test_checks_on_exact_flrw(name):
    sl = flrw_slice()
    report = {**POINTWISE_CHECKS, **EXTRA_CHECKS}[name](sl)
    assert report.passed, report.row()


def test_eov_check_and_its_mutation():
    ok = check_eov_u0(seed=0)
    assert ok.passed, ok.row()
    assert not check_eov_u0(seed=0, mutate=True).passed


def test_eov_residual_is_second_order_in_dt():
    state, grid = random_state(3)
    r = [check_eov_u0(3, dt=dt, state=state, grid=grid).residual for dt in (4e-3, 2e-3, 1e-3)]
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.1)
    assert r[1] / r[2] == pytest.approx(4.0, rel=0.1)


def test_firewall_shape_and_memo():
    reports, mutated = run_firewall([0], names=("A_plus_I", "A0_inverse"))
    assert [r.name for r in reports] == ["A_plus_I", "A0_inverse"]
    assert all(r.passed for r in reports) and not any(m.passed for m in mutated)
    only = run_checks([0], names=("A_plus_I",))
    assert only[0].residual == reports[0].residual
    with pytest.raises(ValueError):
        run_firewall([0], names=("nope",))


def test_report_semantics():
    assert IdentityReport("x", 1e-12, 1e-10).passed
    assert not IdentityReport("x", 1e-9, 1e-10).passed
    assert not IdentityReport("x", math.nan, 1e-10).passed
    with pytest.raises(ValueError):
        IdentityReport("x", -1.0, 1e-10)
    assert "FAIL" in IdentityReport("x", 1.0, 1e-10, seed=4).row()


def test_random_state_deterministic():
    a, _ = random_state(11)
    b, _ = random_state(11)
    assert np.array_equal(a.data, b.data)
