"""Norms, energies, fluid energy currents, equations of variation, and rate fitting.

All H^N norms are sums over multi-indices |alpha| <= N of L^2 norms of
d_alpha f, evaluated spectrally.  Arrays (u^j, the gradient of a scalar) are
combined in l^2 over components; where the definitions sum components
explicitly (g_0j, h_jk) the sum is taken literally.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .background import BackgroundParams, background_at
from .fields import FieldState, I_G00, I_H, I_K00, I_K0, I_KH, I_G0, I_P, I_U, SYM_INDEX
from .geometry import constraint_residuals, slice_data
from .grid import Grid
from .tensor import einsum as E
from .kernels import sym3_min_eigenvalue
from .reduced_system import Slice, assemble_error_terms, fluid_matrices, fluid_rhs, slice_geometry


COLUMNS = (
    "t", "S_g00", "S_g0s", "S_hss", "U_Nm1", "S_fluid", "Q_N",
    "E_g00", "E_g0s", "E_hss", "E_fluid", "E_total",
    "gauge_sup", "gauss_L2", "codazzi_L2", "minP", "min_eig_h", "equiv_ratio",
)  # fmt: skip

RATIO_FLOOR = 1e-12


# ---- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class EnergyConfig:
    """Sobolev order and the (gamma, delta) constants of the metric energies.

    The defaults make delta = beta + gamma * alpha for the damping coefficients
    (alpha, beta) = (5, 6) of the g00 equation and (3, 2) of the g0j equation,
    which removes the v d_t v cross term from the energy identity.
    """

    N: int = 3
    gamma00: float = 1.0
    delta00: float = 11.0
    gamma0s: float = 1.0
    delta0s: float = 5.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("Sobolev order N must be >= 1")
        for g, d, name in ((self.gamma00, self.delta00, "00"), (self.gamma0s, self.delta0s, "0*")):
            if g < 0 or d < 0:
                raise ValueError(f"energy constants ({name}) must be non-negative")
            if g > 0 and not g * g < d:
                raise ValueError(f"energy form ({name}) not positive at g^00 = -1: need gamma^2 < delta")


# ---- norms ---------------------------------------------------------------


@dataclass
class NormBlock:
    S_g00: float
    S_g0s: float
    S_hss: float
    U_Nm1: float
    S_fluid: float

    @property
    def S_g(self) -> float:
        return self.S_g00 + self.S_g0s + self.S_hss

    @property
    def Q_N(self) -> float:
        return self.S_g + self.S_fluid + self.U_Nm1


def norms(state: FieldState, params: BackgroundParams, grid: Grid, N: int = 3) -> NormBlock:
    bg = background_at(params, state.t)
    Om, q = bg.Omega, params.q
    Hs = grid.sobolev_norm
    Hd = grid.gradient_sobolev_norm
    d = state.data
    wq, wq1, wq2 = math.exp(q * Om), math.exp((q - 1.0) * Om), math.exp((q - 2.0) * Om)

    S00 = wq * Hs(d[I_K00], N) + wq * Hs(d[I_G00] + 1.0, N) + wq1 * Hd(d[I_G00], N)
    S0 = sum(
        wq1 * Hs(d[I_K0 + j], N) + wq1 * Hs(d[I_G0 + j], N) + wq2 * Hd(d[I_G0 + j], N) for j in range(3)
    )
    Shh = 0.0
    for j in range(3):
        for k in range(3):
            c = SYM_INDEX[j, k]
            Shh += wq * Hs(d[I_KH + c], N) + Hd(d[I_H + c], N - 1) + wq1 * Hd(d[I_H + c], N)
    u = d[I_U:I_U + 3]
    U = math.exp((1.0 + q) * Om) * math.sqrt(sum(Hs(u[j], N - 1) ** 2 for j in range(3)))
    Sf = math.exp(Om) * math.sqrt(sum(Hs(u[j], N) ** 2 for j in range(3))) + Hs(d[I_P] - params.p_bar, N)
    return NormBlock(S00, S0, Shh, U, Sf)


# ---- metric energies -----------------------------------------------------


@dataclass
class EnergyBlock:
    E_g00: float
    E_g0s: float
    E_hss: float
    positive: bool
    min_form_margin: float

    @property
    def E_g(self) -> float:
        return self.E_g00 + self.E_g0s + self.E_hss


def building_block_energy(grid, ginv, v, dtv, dv, gamma, delta, H) -> float:
    """E^2_{(gamma, delta)}[v, dv] as the grid quadrature of its integrand."""
    integrand = (
        -ginv[0, 0] * dtv**2
        + E("ab...,a...,b...->...", ginv[1:, 1:], dv, dv)
        - 2.0 * gamma * H * ginv[0, 0] * v * dtv
        + delta * H**2 * v**2
    )
    return 0.5 * grid.integrate(integrand)


def _ginv(state: FieldState, params: BackgroundParams):
    from .geometry import invert_metric

    bg = background_at(params, state.t)
    E2 = math.exp(2.0 * bg.Omega)
    g = np.empty((4, 4) + state.data.shape[1:])
    g[0, 0] = state.g00
    g[0, 1:] = state.g0
    g[1:, 0] = state.g0
    g[1:, 1:] = E2 * state.h
    return invert_metric(g)[0], g, bg


def metric_energies(
    state: FieldState, params: BackgroundParams, grid: Grid, cfg: EnergyConfig = EnergyConfig()
) -> EnergyBlock:
    ginv, _, bg = _ginv(state, params)
    H, q, Om = params.H, params.q, bg.Omega
    N = cfg.N
    d = state.data
    # the quadratic form in (d_t v, v) is positive iff gamma^2 |g^00| < delta
    m = -ginv[0, 0]
    margins = []
    for g_, d_ in ((cfg.gamma00, cfg.delta00), (cfg.gamma0s, cfg.delta0s)):
        if g_ > 0:
            margins.append(float(np.min(d_ - g_ * g_ * m)))
    margin = min(margins) if margins else math.inf
    positive = bool(np.all(m > 0) and margin > 0)

    v_stack = np.concatenate([(d[I_G00] + 1.0)[None], d[I_G0:I_G0 + 3], d[I_H:I_H + 6]])
    t_stack = np.concatenate([d[I_K00][None], d[I_K0:I_K0 + 3], d[I_KH:I_KH + 6]])
    e00 = e0 = ehh = 0.0
    mult_h = np.array([1.0 if a == b else 2.0 for a, b in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))])
    derivs_t = grid.multi_derivatives(t_stack, N)
    for (alpha, dv, grad), (_, dtv, _) in zip(grid.multi_derivatives(v_stack, N, with_gradient=True), derivs_t):
        e00 += building_block_energy(grid, ginv, dv[0], dtv[0], grad[:, 0], cfg.gamma00, cfg.delta00, H)
        for j in range(3):
            e0 += building_block_energy(
                grid, ginv, dv[1 + j], dtv[1 + j], grad[:, 1 + j], cfg.gamma0s, cfg.delta0s, H
            )
        c_alpha = 0.0 if sum(alpha) == 0 else 1.0
        for c in range(6):
            block = building_block_energy(grid, ginv, 0.0, dtv[4 + c], grad[:, 4 + c], 0.0, 0.0, H)
            extra = 0.5 * c_alpha * H**2 * grid.integrate(dv[4 + c] ** 2)
            ehh += mult_h[c] * (math.exp(2.0 * q * Om) * block + extra)
    E00 = math.exp(q * Om) * math.sqrt(max(e00, 0.0))
    E0 = math.exp((q - 1.0) * Om) * math.sqrt(max(e0, 0.0))
    Ehh = math.sqrt(max(ehh, 0.0))
    return EnergyBlock(E00, E0, Ehh, positive, margin)


# ---- fluid energy current ------------------------------------------------


def dot_u0(sl: Slice, udot: np.ndarray) -> np.ndarray:
    """u'^0 = -(1/u_0) u_a u'^a."""
    u_low = sl.cache.u_low
    return -E("a...,a...->...", u_low[1:], udot) / u_low[0]


def energy_current(sl: Slice, Pdot: np.ndarray, udot: np.ndarray) -> np.ndarray:
    """J^mu[W', W'] = u^mu P'^2/((1+c^2)P) + 2 u'^mu P' + ((1+c^2)P/c^2) u^mu g(u', u')."""
    cs2 = sl.params.cs2
    c = sl.cache
    P = sl.P
    ud = np.concatenate([dot_u0(sl, udot)[None], udot])
    G = E("ab...,a...,b...->...", c.g, ud, ud)
    K = (1.0 + cs2) * P / cs2
    return c.u_up * (Pdot**2 / ((1.0 + cs2) * P) + K * G) + 2.0 * ud * Pdot


@dataclass
class FluidEnergy:
    E_N: float
    integrals: dict  # alpha -> int J^0
    min_J0: float


def fluid_energy(state: FieldState, params: BackgroundParams, grid: Grid, N: int = 3, sl: Slice | None = None):
    sl = slice_geometry(state, params, grid) if sl is None else sl
    W = np.concatenate([(sl.P - params.p_bar)[None], sl.u])
    total = 0.0
    ints = {}
    jmin = math.inf
    for alpha, dW, _ in grid.multi_derivatives(W, N):
        J0 = energy_current(sl, dW[0], dW[1:])[0]
        val = grid.integrate(J0)
        ints[alpha] = val
        total += val
        jmin = min(jmin, float(np.min(J0)))
    return FluidEnergy(math.sqrt(max(total, 0.0)), ints, jmin)


# ---- equations of variation ------------------------------------------------


@dataclass
class VariationBundle:
    alpha: tuple
    Pdot: np.ndarray
    udot: np.ndarray  # (3, ...)
    udot0: np.ndarray
    F: np.ndarray  # frak F_alpha
    G: np.ndarray  # frak G^j_alpha, (3, ...)


def _partial(grid, F, alpha):
    """d_alpha applied over the trailing three axes of a stack."""
    if sum(alpha) == 0:
        return F.copy()
    lead = F.shape[:-3]
    flat = F.reshape((-1,) + F.shape[-3:])
    return np.stack([grid.partial(f, alpha) for f in flat]).reshape(lead + F.shape[-3:])


def _matvec(M, v):
    return E("ij...,j...->i...", M, v)


def variation_bundle(sl: Slice, alpha, err=None) -> VariationBundle:
    """W' = d_alpha W and the inhomogeneities (F_alpha, G^j_alpha) of the equations of variation.

    b_Delta,alpha = {A^0 d_alpha[(A^0)^-1 b] - d_alpha b} + A^0 d_alpha[(A^0)^-1 b_Delta]
                    + A^0 {(A^0)^-1 A^a d_a d_alpha W - d_alpha[(A^0)^-1 A^a d_a W]}
    with b = (0, (delta - 2) omega u^j).
    """
    alpha = tuple(int(a) for a in alpha)
    grid = sl.grid
    err = assemble_error_terms(sl) if err is None else err
    fv = fluid_matrices(sl, err)
    A0, inv = fv.A[0], fv.A0_inv
    W = fv.W
    dW = np.concatenate([sl.dP[:, None], sl.du], axis=1)  # [c, i]
    AadW = sum(_matvec(fv.A[1 + a], dW[a]) for a in range(3))
    dal = partial(_partial, grid, alpha=alpha)
    Wa = dal(W)
    dWa = np.stack([grid.gradient(Wa[i]) for i in range(4)], axis=1)  # [c, i]
    Aa_dWa = sum(_matvec(fv.A[1 + a], dWa[a]) for a in range(3))
    bda = (
        _matvec(A0, dal(_matvec(inv, fv.b)))
        - dal(fv.b)
        + _matvec(A0, dal(_matvec(inv, fv.b_delta)))
        + Aa_dWa
        - _matvec(A0, dal(_matvec(inv, AadW)))
    )
    ud = Wa[1:]
    return VariationBundle(alpha, Wa[0], ud, dot_u0(sl, ud), bda[0], bda[1:])


def _ratio_and_derivatives(sl: Slice, err, dtu=None):
    """r_a = u_a/u_0 and its derivatives d_mu r_a (index [mu, a]).

    The time derivative uses d_t u from the evolution equations and d_t g from the
    state unless `dtu` = (d_t u^0, d_t u^j) is supplied.
    """
    c = sl.cache
    u_up, u_low, g, dg = c.u_up, c.u_low, c.g, c.dg
    if dtu is None:
        dP, duj = fluid_rhs(sl, err)
        dtu = np.concatenate([err.prime0[None], duj])
    d_up = np.empty((4, 4) + sl.P.shape)
    d_up[0] = dtu
    d_up[1:, 0] = err.du0
    d_up[1:, 1:] = sl.du
    d_low = E("kmn...,n...->km...", dg, u_up) + E("mn...,kn...->km...", g, d_up)
    r = u_low[1:] / u_low[0]
    dr = (d_low[:, 1:] - r[None] * d_low[:, 0][:, None]) / u_low[0]
    return r, dr, d_up


def frak_G0(sl: Slice, vb: VariationBundle, dr: np.ndarray) -> np.ndarray:
    """G^0 = -[u^mu d_mu(u_a/u_0)] u'^a - (delta - 2) omega (1/u_0) u_a u'^a - (1/u_0) u_a G^a."""
    c = sl.cache
    u_up, u_low = c.u_up, c.u_low
    dlt, w = sl.params.delta_param, sl.omega
    transport = E("m...,ma...->a...", u_up, dr)
    return (
        -E("a...,a...->...", transport, vb.udot)
        - (dlt - 2.0) * w * E("a...,a...->...", u_low[1:], vb.udot) / u_low[0]
        - E("a...,a...->...", u_low[1:], vb.G) / u_low[0]
    )


def _check_times(snapshots):
    if len(snapshots) != 3:
        raise ValueError("need exactly three consecutive snapshots")
    t0, t1, t2 = (s.t for s in snapshots)
    dt = t1 - t0
    if not (dt != 0 and abs((t2 - t1) - dt) <= 1e-9 * abs(dt)):
        raise ValueError(f"mismatched snapshot times {t0}, {t1}, {t2}")
    return dt


def eov_u0_terms(snapshots, params, grid, alpha):
    """Both sides of the u'^0 transport equation at the middle of three snapshots.

    Time derivatives (of u'^0, P' and u_a/u_0) are centered differences across the
    snapshots; spatial derivatives of u'^0 use the product rule.  Returns
    (lhs, G0, w_term) where w_term = -(delta - 2) omega (1/u_0) u_a u'^a is one of
    the summands of G0.
    """
    dt = _check_times(snapshots)
    slices = [slice_geometry(s, params, grid) for s in snapshots]
    mid = slices[1]
    err = assemble_error_terms(mid)
    vbs = [variation_bundle(s, alpha, err if s is mid else None) for s in slices]
    vb = vbs[1]
    cs2 = params.cs2
    c = mid.cache
    u_up, Pi = c.u_up, c.Pi
    kP = cs2 / ((1.0 + cs2) * mid.P)

    dt_ud0 = (vbs[2].udot0 - vbs[0].udot0) / (2.0 * dt)
    dt_Pd = (vbs[2].Pdot - vbs[0].Pdot) / (2.0 * dt)
    ratios = [s.cache.u_low[1:] / s.cache.u_low[0] for s in slices]
    _, dr, _ = _ratio_and_derivatives(mid, err)
    dr = dr.copy()
    dr[0] = (ratios[2] - ratios[0]) / (2.0 * dt)
    r = ratios[1]
    grad_ud = np.stack([grid.gradient(vb.udot[a]) for a in range(3)], axis=1)  # [c, a]
    grad_ud0 = -E("ca...,a...->c...", dr[1:], vb.udot) - E("a...,ca...->c...", r, grad_ud)
    grad_Pd = grid.gradient(vb.Pdot)
    lhs = (
        u_up[0] * dt_ud0
        + E("c...,c...->...", u_up[1:], grad_ud0)
        + kP * (Pi[0, 0] * dt_Pd + E("c...,c...->...", Pi[0, 1:], grad_Pd))
    )
    G0 = frak_G0(mid, vb, dr)
    u_low = c.u_low
    w_term = -(params.delta_param - 2.0) * mid.omega * E("a...,a...->...", u_low[1:], vb.udot) / u_low[0]
    return lhs, G0, w_term


def eov_u0_residual(snapshots, params, grid, alpha) -> float:
    """sup |lhs - G0| relative to the sup of either side."""
    lhs, G0, _ = eov_u0_terms(snapshots, params, grid, alpha)
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(G0))))
    res = float(np.max(np.abs(lhs - G0)))
    return res / scale if scale > 0 else res


def divergence_terms(sl: Slice, vb: VariationBundle, err, form: str = "corrected"):
    """Right-hand side of the divergence identity for J'^mu at one slice.

    ``form="corrected"`` is the identity that follows from the equations of
    variation.  ``form="lumped"`` lumps the shift terms as 4K g_0a G^0 u'^a and
    drops (delta-2) omega g_0j u'^0 u'^j; it does not converge and is kept for
    comparison.
    """
    if form not in ("corrected", "lumped"):
        raise ValueError(f"unknown form {form!r}")
    params = sl.params
    cs2, dlt, w = params.cs2, params.delta_param, sl.omega
    c = sl.cache
    g, dg, u_up, u_low = c.g, c.dg, c.u_up, c.u_low
    P = sl.P
    dtP, _ = fluid_rhs(sl, err)
    r, dr, d_up = _ratio_and_derivatives(sl, err)
    K = (1.0 + cs2) * P / cs2
    dK = np.concatenate([((1.0 + cs2) / cs2 * dtP)[None], (1.0 + cs2) / cs2 * sl.dP])
    inv = 1.0 / ((1.0 + cs2) * P)
    dinv = -np.concatenate([dtP[None], sl.dP]) * inv**2 * (1.0 + cs2)
    # d_mu (u^mu X) = (d_mu u^mu) X + u^mu d_mu X
    div_u = _diag(d_up)
    Pd, ud = vb.Pdot, vb.udot
    ud_full = np.concatenate([vb.udot0[None], ud])
    G = E("ab...,a...,b...->...", g, ud_full, ud_full)
    t1 = (div_u * inv + E("m...,m...->...", u_up, dinv)) * Pd**2
    t2 = 2.0 * vb.F * Pd * inv
    t3 = -2.0 * E("a...,a...->...", dr[0], ud) * Pd
    t4 = (div_u * K + E("m...,m...->...", u_up, dK)) * G
    t5 = K * E("m...,mab...,a...,b...->...", u_up, dg, ud_full, ud_full)
    G0 = frak_G0(sl, vb, dr)
    g0a = g[0, 1:]
    if form == "corrected":
        t6 = 2.0 * K * (
            g[0, 0] * G0 * vb.udot0
            + E("a...,a...->...", g0a, vb.G) * vb.udot0
            + E("a...,a...->...", g0a, ud) * G0
            + E("ab...,a...,b...->...", g[1:, 1:], vb.G, ud)
            + (dlt - 2.0) * w * (E("a...,a...->...", g0a, ud) * vb.udot0 + E("ab...,a...,b...->...", g[1:, 1:], ud, ud))
        )
    else:
        t6 = 2.0 * K * (
            g[0, 0] * G0 * vb.udot0
            + 2.0 * E("a...,a...->...", g0a, ud) * G0
            + E("ab...,a...,b...->...", g[1:, 1:], vb.G, ud)
            + (dlt - 2.0) * w * E("ab...,a...,b...->...", g[1:, 1:], ud, ud)
        )
    return t1 + t2 + t3 + t4 + t5 + t6


def _diag(d_up):
    """d_mu u^mu from the [mu, nu] array of derivatives d_mu u^nu."""
    return sum(d_up[m, m] for m in range(4))


def divergence_residual(snapshots, params, grid, alpha, form: str = "corrected"):
    """L^1 norm of d_t J'^0 + d_a J'^a - RHS at the middle of three snapshots.

    d_t J'^0 is a centered difference across the snapshots, d_a J'^a is spectral,
    and the right-hand side is evaluated in closed form at the middle slice.
    """
    dt = _check_times(snapshots)
    slices = [slice_geometry(s, params, grid) for s in snapshots]
    mid = slices[1]
    err = assemble_error_terms(mid)
    J0s = []
    for s in (slices[0], slices[2]):
        vb_s = variation_bundle(s, alpha)
        J0s.append(energy_current(s, vb_s.Pdot, vb_s.udot)[0])
    vb = variation_bundle(mid, alpha, err)
    J = energy_current(mid, vb.Pdot, vb.udot)
    div = (J0s[1] - J0s[0]) / (2.0 * dt) + sum(grid.derivative(J[1 + a], 1 + a) for a in range(3))
    rhs = divergence_terms(mid, vb, err, form=form)
    return grid.l1_norm(div - rhs)


def divergence_series(states, params, grid, alpha, form: str = "corrected"):
    """divergence_residual over every interior triple of an equally spaced sequence of states."""
    return [
        (states[i].t, divergence_residual(states[i - 1:i + 2], params, grid, alpha, form))
        for i in range(1, len(states) - 1)
    ]


# ---- one diagnostics row ---------------------------------------------------


@dataclass
class DiagnosticsRecord:
    t: float
    S_g00: float
    S_g0s: float
    S_hss: float
    U_Nm1: float
    S_fluid: float
    Q_N: float
    E_g00: float
    E_g0s: float
    E_hss: float
    E_fluid: float
    E_total: float
    gauge_sup: float
    gauss_L2: float
    codazzi_L2: float
    minP: float
    min_eig_h: float
    equiv_ratio: float
    energy_positive: bool = True
    min_J0: float = 0.0

    def row(self) -> list:
        return [getattr(self, c) for c in COLUMNS]


def equivalence_ratio(energy: float, norm: float) -> float:
    """max(E/Q, Q/E); both below RATIO_FLOOR counts as agreement."""
    if energy < RATIO_FLOOR and norm < RATIO_FLOOR:
        return 1.0
    if energy <= 0 or norm <= 0:
        return math.inf
    return max(energy / norm, norm / energy)


def record(state: FieldState, params: BackgroundParams, grid: Grid, cfg: EnergyConfig = EnergyConfig()):
    sl = slice_geometry(state, params, grid)
    nb = norms(state, params, grid, cfg.N)
    eb = metric_energies(state, params, grid, cfg)
    fe = fluid_energy(state, params, grid, cfg.N, sl=sl)
    E_total = eb.E_g + fe.E_N + nb.U_Nm1
    data, sources = slice_data(sl.cache, grid, sl.p, params.cs2)
    gauss, codazzi = constraint_residuals(data, grid, params.Lambda, params.cs2, sources)
    return DiagnosticsRecord(
        t=state.t,
        S_g00=nb.S_g00,
        S_g0s=nb.S_g0s,
        S_hss=nb.S_hss,
        U_Nm1=nb.U_Nm1,
        S_fluid=nb.S_fluid,
        Q_N=nb.Q_N,
        E_g00=eb.E_g00,
        E_g0s=eb.E_g0s,
        E_hss=eb.E_hss,
        E_fluid=fe.E_N,
        E_total=E_total,
        gauge_sup=float(np.max(np.abs(sl.cache.Q_low))),
        gauss_L2=grid.l2_norm(gauss),
        codazzi_L2=math.sqrt(sum(grid.l2_norm(codazzi[j]) ** 2 for j in range(3))),
        minP=float(np.min(state.P)),
        min_eig_h=float(np.min(sym3_min_eigenvalue(state.h))),
        equiv_ratio=equivalence_ratio(E_total, nb.Q_N),
        energy_positive=eb.positive,
        min_J0=fe.min_J0,
    )


class CsvWriter:
    """Diagnostics CSV with the documented columns, flushed after every row."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(COLUMNS)
        self._fh.flush()

    def write(self, rec: DiagnosticsRecord):
        self._w.writerow([repr(float(v)) for v in rec.row()])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_csv(path) -> dict:
    """Diagnostics CSV as a dict of column -> float array; schema checked."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    table = np.array([[float(x) for x in r] for r in body])
    return {name: table[:, i] for i, name in enumerate(header)}


# ---- rates and limits ----------------------------------------------------


@dataclass
class DecayFit:
    rate: float  # slope of log(value) against t
    r2: float
    samples: int


def fit_decay_rate(t, values, window=None) -> DecayFit:
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("t and values must have the same length")
    if window is not None:
        lo, hi = window
        keep = (t >= lo - 1e-12) & (t <= hi + 1e-12)
        t, v = t[keep], v[keep]
    if len(t) < 2:
        raise ValueError("need at least two samples in the window")
    if np.any(~(v > 0)):
        raise ValueError("values in the window must be positive")
    y = np.log(v)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss == 0 else 1.0 - float(np.sum(resid**2)) / ss
    return DecayFit(float(slope), r2, len(t))


@dataclass
class Asymptotics:
    g_inf: np.ndarray  # (3, 3, ...)
    u_inf: np.ndarray  # (3, ...)
    P_inf: np.ndarray
    cauchy: dict  # quantity -> sup difference between the last two snapshots


def extract_asymptotics(snapshots, params: BackgroundParams, min_Ht: float = 5.0) -> Asymptotics:
    """Late-time limits of h_jk, e^{(2-delta) Omega} u^j and P from the last snapshot."""
    if len(snapshots) < 2:
        raise ValueError("need at least two late snapshots")
    last, prev = snapshots[-1], snapshots[-2]
    if params.H * last.t < min_Ht:
        raise ValueError(f"run too short: H t = {params.H * last.t:.3g} < {min_Ht}")
    dlt = params.delta_param

    def lim(s):
        Om = background_at(params, s.t).Omega
        return s.h, math.exp((2.0 - dlt) * Om) * s.u, s.P

    a, b = lim(last), lim(prev)
    names = ("g_inf", "u_inf", "P_inf")
    cauchy = {n: float(np.max(np.abs(x - y))) for n, x, y in zip(names, a, b)}
    return Asymptotics(a[0].copy(), a[1].copy(), a[2].copy(), cauchy)


__all__ = [
    "COLUMNS", "EnergyConfig", "NormBlock", "EnergyBlock", "FluidEnergy", "VariationBundle",
    "DiagnosticsRecord", "DecayFit", "Asymptotics", "norms", "metric_energies",
    "building_block_energy", "energy_current", "dot_u0", "fluid_energy", "variation_bundle",
    "eov_u0_terms", "eov_u0_residual", "divergence_terms", "divergence_residual", "divergence_series",
    "equivalence_ratio", "record", "CsvWriter", "read_csv", "fit_decay_rate", "extract_asymptotics",
]  # fmt: skip
