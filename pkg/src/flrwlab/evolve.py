"""RK4 method-of-lines integration with CFL step control and breakdown monitors."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .background import BackgroundParams, background_at
from .errors import CASE_DESCRIPTIONS, Breakdown, first_bad
from .fields import FieldState, I_G00, I_H, I_P, SYM_INDEX
from .geometry import invert_metric
from .grid import Grid
from .kernels import sym3_min_eigenvalue
from .reduced_system import full_rhs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Thresholds:
    """Continuation-criterion monitors: a run stops with breakdown case 1-4 when one trips."""

    min_abs_g00: float = 1e-2
    min_eig_h: float = 1e-2
    min_P: float = 1e-8
    max_cb: float = 1e8

    def __post_init__(self):
        for name in ("min_abs_g00", "min_eig_h", "min_P", "max_cb"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"threshold {name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class RunConfig:
    t_end: float
    cfl: float = 0.5
    cadence: float = 0.25
    n: int = 16
    backend: str = "spectral"
    dealias: bool = True
    thresholds: Thresholds = field(default_factory=Thresholds)
    dt_max: float | None = None
    fixed_dt: float | None = None

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"CFL factor must lie in (0, 1], got {self.cfl}")
        if not self.cadence > 0:
            raise ValueError(f"output cadence must be positive, got {self.cadence}")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            raise ValueError("fixed_dt must be positive")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError("dt_max must be positive")

    def grid(self) -> Grid:
        return Grid(self.n, backend=self.backend, dealias=self.dealias)


def step(state: FieldState, params: BackgroundParams, grid: Grid, dt: float) -> FieldState:
    """One classical RK4 step; the background is evaluated at each stage time."""
    t, y = state.t, state.data

    def f(tt, yy):
        return full_rhs(FieldState(tt, yy), params, grid)

    try:
        k1 = f(t, y)
        k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = f(t + dt, y + dt * k3)
    except Breakdown as exc:
        raise exc.at_time(t) from None
    return FieldState(t + dt, y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def max_light_speed(state: FieldState, params: BackgroundParams) -> float:
    """Largest coordinate speed of the light cone of g, floored at 1."""
    bg = background_at(params, state.t)
    E2 = math.exp(2.0 * bg.Omega)
    n = state.n
    g = np.empty((4, 4, n, n, n))
    g[0, 0] = state.g00
    g[0, 1:] = state.g0
    g[1:, 0] = state.g0
    g[1:, 1:] = E2 * state.h
    ginv, _, _ = invert_metric(g)
    a = -ginv[0, 0]
    b = np.sqrt(np.sum(ginv[0, 1:] ** 2, axis=0))
    lam = np.linalg.eigvalsh(np.moveaxis(ginv[1:, 1:], (0, 1), (-2, -1)))[..., -1]
    speed = (b + np.sqrt(b * b + a * lam)) / a
    return max(1.0, float(np.max(speed)))


def stable_dt(state: FieldState, params: BackgroundParams, grid: Grid, config: RunConfig) -> float:
    if config.fixed_dt is not None:
        return config.fixed_dt
    dt = config.cfl * grid.spacing / max_light_speed(state, params)
    if config.dt_max is not None:
        dt = min(dt, config.dt_max)
    return dt


def check_breakdown(state: FieldState, grid: Grid, thr: Thresholds) -> None:
    """Raise Breakdown if the state has left the regime where the run may continue."""
    d = state.data
    finite = np.isfinite(d)
    if not np.all(finite):
        raise Breakdown(4, "non-finite values in the solution", first_bad(~np.all(finite, axis=0)), state.t)
    bad = np.abs(d[I_G00]) < thr.min_abs_g00
    if np.any(bad) or np.any(d[I_G00] >= 0):
        bad = bad | (d[I_G00] >= 0)
        raise Breakdown(1, f"|g00| fell below {thr.min_abs_g00:g}", first_bad(bad), state.t)
    eig = sym3_min_eigenvalue(d[I_H:I_H + 6][SYM_INDEX])
    bad = ~(eig >= thr.min_eig_h)
    if np.any(bad):
        raise Breakdown(2, f"smallest eigenvalue of h fell below {thr.min_eig_h:g}", first_bad(bad), state.t)
    bad = ~(d[I_P] >= thr.min_P)
    if np.any(bad):
        raise Breakdown(3, f"P fell below {thr.min_P:g}", first_bad(bad), state.t)
    cb = cb_norm(state, grid)
    if not cb <= thr.max_cb:
        raise Breakdown(4, f"C_b proxy norm {cb:.3g} exceeded {thr.max_cb:g}", None, state.t)


def cb_norm(state: FieldState, grid: Grid) -> float:
    """Proxy for the C^1_b norm: sup of every evolved field and of its spatial gradient."""
    d, _ = grid.derivatives(state.data)
    return float(np.max(np.abs(state.data)) + np.max(np.abs(d)))


@dataclass
class RunResult:
    times: list
    records: list
    snapshots: list  # FieldState at output times, if kept
    reason: str  # "completed" or "breakdown"
    breakdown: Breakdown | None = None
    steps: int = 0

    @property
    def completed(self) -> bool:
        return self.reason == "completed"

    @property
    def case(self) -> int | None:
        return None if self.breakdown is None else self.breakdown.case

    def describe(self) -> str:
        if self.breakdown is None:
            return f"completed at t={self.times[-1]:.6g} after {self.steps} steps"
        b = self.breakdown
        return f"{b} [{CASE_DESCRIPTIONS[b.case]}]"


def run(
    initial: FieldState,
    params: BackgroundParams,
    config: RunConfig,
    grid: Grid | None = None,
    diagnostics=None,
    on_output=None,
    keep_snapshots: bool = False,
) -> RunResult:
    """Advance to config.t_end or until breakdown.

    ``diagnostics(state, grid)`` is called at every output time and its return
    value collected in ``records``; ``on_output(state, record)`` is a hook for
    streaming output (CSV rows, snapshots).  Exceptions raised by the hooks are
    not breakdowns and propagate unchanged.
    """
    grid = config.grid() if grid is None else grid
    if initial.n != grid.n:
        raise ValueError(f"initial state has n={initial.n}, config asks for n={grid.n}")
    state = initial
    times, records, snaps = [], [], []
    n_out = 0
    steps = 0

    def emit(s):
        rec = diagnostics(s, grid) if diagnostics is not None else None
        times.append(s.t)
        records.append(rec)
        if keep_snapshots:
            snaps.append(s)
        if on_output is not None:
            on_output(s, rec)

    try:
        check_breakdown(state, grid, config.thresholds)
        emit(state)
        t_end = config.t_end
        while state.t < t_end - 1e-12 * max(1.0, t_end):
            next_out = min(initial.t + (n_out + 1) * config.cadence, t_end)
            dt = min(stable_dt(state, params, grid, config), next_out - state.t)
            new = step(state, params, grid, dt)
            steps += 1
            check_breakdown(new, grid, config.thresholds)
            state = new
            if abs(state.t - next_out) <= 1e-12 * max(1.0, abs(next_out)):
                state = replace(state, t=next_out)
                n_out += 1
                emit(state)
    except Breakdown as exc:
        log.info("run stopped: %s", exc)
        return RunResult(times, records, snaps, "breakdown", exc, steps)
    except FloatingPointError as exc:
        b = Breakdown(4, f"floating point error: {exc}", None, state.t)
        return RunResult(times, records, snaps, "breakdown", b, steps)
    return RunResult(times, records, snaps, "completed", None, steps)
