"""Shared field builders for the tests."""

import numpy as np

from flrwlab.evolve import step
from flrwlab.fields import I_G00, FieldState
from flrwlab.grid import Grid
from flrwlab.initial_data import flrw_state


def random_metric(grid: Grid, rng, eps=0.1, kmax=2):
    """Lorentzian g_{mu nu} near diag(-1, 1, 1, 1) and its space-time derivatives dg[lam, mu, nu]."""
    g = np.zeros((4, 4) + grid.shape)
    dt = np.zeros_like(g)
    for m in range(4):
        for n in range(m, 4):
            g[m, n] = (m == n) * (1.0 if m else -1.0) + grid.random_field(rng, kmax, eps)
            g[n, m] = g[m, n]
            dt[m, n] = grid.random_field(rng, kmax, eps)
            dt[n, m] = dt[m, n]
    dsp = np.stack([np.stack([grid.gradient(g[m, n]) for n in range(4)]) for m in range(4)])
    dg = np.concatenate([dt[None], np.moveaxis(dsp, 2, 0)])
    return g, dg


def single_mode_state(params, n, eps, k=1):
    """FLRW data with g00 -> -1 + eps cos(k x1)."""
    grid = Grid(n)
    d = flrw_state(params, grid).data.copy()
    d[I_G00] += eps * np.cos(k * grid.coords[0])
    return FieldState(0.0, d), grid


def evolve_fixed(state, params, grid, dt, t_end):
    for _ in range(round((t_end - state.t) / dt)):
        state = step(state, params, grid, dt)
    return state
