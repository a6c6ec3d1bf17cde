"""Initial slices: exact FLRW, data built from (g, K, p, u) on a t = 0 slice with the
wave-coordinate condition enforced, and seeded random perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import BackgroundParams, background_at
from .fields import FieldState
from .geometry import GeometricData, sym3_inverse
from .grid import Grid

TARGETS = ("g", "K", "p", "u")


def flrw_state(params: BackgroundParams, grid: Grid, t: float = 0.0) -> FieldState:
    """The background in rescaled variables; the same arrays at every t."""
    z = grid.zeros()
    eye = np.zeros((3, 3) + grid.shape)
    for j in range(3):
        eye[j, j] = 1.0
    return FieldState.from_components(
        t,
        g00=-np.ones(grid.shape),
        g0=grid.zeros(3),
        h=eye,
        k00=z,
        k0=grid.zeros(3),
        kh=np.zeros_like(eye),
        P=np.full(grid.shape, params.p_bar),
        u=grid.zeros(3),
    )


def flrw_geometric_data(params: BackgroundParams, grid: Grid) -> GeometricData:
    w0 = background_at(params, 0.0).omega
    eye = np.zeros((3, 3) + grid.shape)
    for j in range(3):
        eye[j, j] = 1.0
    return GeometricData(g=eye, K=w0 * eye, p=np.full(grid.shape, params.p_bar), u=grid.zeros(3))


def from_geometric_data(data: GeometricData, params: BackgroundParams, grid: Grid) -> FieldState:
    """Unit lapse, zero shift, and d_t g_{0mu} chosen so that Q_mu = 0 at t = 0.

    d_t g_jk = 2 K_jk, d_t g00 = 2(3 omega(0) - g^{ab} K_ab),
    d_t g0j = g^{ab}(d_a g_bj - 1/2 d_j g_ab).
    """
    w0 = background_at(params, 0.0).omega
    g3 = data.g
    g3_inv, _ = sym3_inverse(g3)
    dg3 = np.stack([np.stack([grid.gradient(g3[a, b]) for b in range(3)]) for a in range(3)])
    dg3 = np.moveaxis(dg3, 2, 0)  # [c, a, b]
    trK = np.einsum("ab...,ab...->...", g3_inv, data.K)
    k00 = 2.0 * (3.0 * w0 - trK)
    k0 = np.einsum("ab...,abj...->j...", g3_inv, dg3) - 0.5 * np.einsum("ab...,jab...->j...", g3_inv, dg3)
    # Omega(0) = 0, so h = g and d_t h = d_t g - 2 omega g
    kh = 2.0 * data.K - 2.0 * w0 * g3
    return FieldState.from_components(
        0.0,
        g00=-np.ones(grid.shape),
        g0=grid.zeros(3),
        h=g3.copy(),
        k00=k00,
        k0=k0,
        kh=kh,
        P=data.p.copy(),
        u=data.u.copy(),
    )


@dataclass(frozen=True)
class PerturbationSpec:
    amplitude: float
    kmax: int = 2
    seed: int = 0
    targets: tuple = TARGETS

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError("amplitude must be non-negative")
        if self.kmax < 1:
            raise ValueError("kmax must be >= 1")
        bad = set(self.targets) - set(TARGETS)
        if bad:
            raise ValueError(f"unknown perturbation targets {sorted(bad)}; choose from {TARGETS}")


def perturbed_data(spec: PerturbationSpec, params: BackgroundParams, grid: Grid) -> GeometricData:
    """FLRW data plus band-limited zero-mean perturbations of sup-amplitude eps.

    All fields are drawn in a fixed order whatever the targets, so a given seed
    produces the same perturbation of g whether or not u is also perturbed.
    """
    if spec.kmax > grid.n // 4:
        raise ValueError(f"kmax={spec.kmax} exceeds n/4={grid.n // 4}")
    base = flrw_geometric_data(params, grid)
    eps = spec.amplitude
    if eps == 0:
        return base
    rng = np.random.default_rng(spec.seed)

    def sym_draw():
        out = np.empty((3, 3) + grid.shape)
        for a in range(3):
            for b in range(a, 3):
                out[a, b] = grid.random_field(rng, spec.kmax, eps)
                out[b, a] = out[a, b]
        return out

    dg = sym_draw()
    dK = sym_draw()
    dp = grid.random_field(rng, spec.kmax, eps)
    du = np.stack([grid.random_field(rng, spec.kmax, eps) for _ in range(3)])
    t = set(spec.targets)
    return GeometricData(
        g=base.g + (dg if "g" in t else 0.0),
        K=base.K + (dK if "K" in t else 0.0),
        p=base.p * (1.0 + (dp if "p" in t else 0.0)),
        u=du if "u" in t else base.u,
    )
