"""Right-hand sides of the modified Euler-Einstein system in first-order-in-time form.

Every error term is a literal transcription of its decomposition formula.  The
under-braced combinations that are O(1) differences of O(e^{2 Omega}) quantities,
such as ``g^{ab} d_t g_{al} - 2 omega delta^b_l``, are always evaluated in their
h-variable form (``_Parts`` below); the raw form only appears in ``identity_lab``.

Index conventions follow ``geometry``: ``dg[lam, mu, nu] = d_lam g_{mu nu}`` and
``Gamma_low[mu, alpha, nu] = Gamma_{mu alpha nu}`` with the lowered index in the
middle.  Inside this module spatial indices run 0..2 and map to 1..3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .background import BackgroundParams, BackgroundState, background_at
from .errors import Breakdown, first_bad
from .fields import I_G00, I_G0, I_H, I_K00, I_K0, I_KH, I_P, I_U, NCOMP, SYM_INDEX, SYM_PAIRS, FieldState
from .geometry import GeometryCache, build_cache
from .grid import Grid
from .tensor import einsum as E



@dataclass
class Slice:
    """A FieldState together with everything pointwise that the RHS needs."""

    state: FieldState
    params: BackgroundParams
    bg: BackgroundState
    grid: Grid
    E2: float
    cache: GeometryCache
    h: np.ndarray  # (3, 3, ...)
    kh: np.ndarray  # d_t h, (3, 3, ...)
    dd_g00: np.ndarray  # [c, e] = d_c d_e g00
    dd_g0: np.ndarray  # [c, e, j]
    dd_h: np.ndarray  # [c, e, a, b]
    dk00: np.ndarray  # [c]
    dk0: np.ndarray  # [c, j]
    dkh: np.ndarray  # [c, a, b]
    dh: np.ndarray  # [c, a, b] = d_c h_ab
    P: np.ndarray
    dP: np.ndarray  # [c]
    u: np.ndarray  # [j]
    du: np.ndarray  # [c, j] = d_c u^j
    p: np.ndarray  # physical pressure e^{-varsigma Omega} P

    @property
    def omega(self) -> float:
        return self.bg.omega

    @property
    def decay(self) -> float:
        """e^{-varsigma Omega}."""
        return math.exp(-self.params.varsigma * self.bg.Omega)


def _sym(stack6):
    return stack6[SYM_INDEX]


def slice_geometry(state: FieldState, params: BackgroundParams, grid: Grid) -> Slice:
    bg = background_at(params, state.t)
    E2 = math.exp(2.0 * bg.Omega)
    w = bg.omega
    n = state.n
    if n != grid.n:
        raise ValueError(f"state has n={n} but grid has n={grid.n}")

    data = state.data
    metric = data[I_G00:I_H + 6]
    kstack = data[I_K00:I_KH + 6]
    fluid = data[I_P:I_U + 3]
    d_m, dd_m = grid.derivatives(metric, second=True)
    d_k, _ = grid.derivatives(kstack)
    d_f, _ = grid.derivatives(fluid)

    h = _sym(data[I_H:I_H + 6])
    kh = _sym(data[I_KH:I_KH + 6])
    g = np.empty((4, 4) + grid.shape)
    g[0, 0] = data[I_G00]
    g[0, 1:] = data[I_G0:I_G0 + 3]
    g[1:, 0] = data[I_G0:I_G0 + 3]
    g[1:, 1:] = E2 * h

    dh = d_m[:, 4:10][:, SYM_INDEX]  # [c, a, b]
    dg = np.empty((4, 4, 4) + grid.shape)
    dg[0, 0, 0] = data[I_K00]
    dg[0, 0, 1:] = data[I_K0:I_K0 + 3]
    dg[0, 1:, 0] = data[I_K0:I_K0 + 3]
    dg[0, 1:, 1:] = E2 * (kh + 2.0 * w * h)
    dg[1:, 0, 0] = d_m[:, 0]
    dg[1:, 0, 1:] = d_m[:, 1:4]
    dg[1:, 1:, 0] = d_m[:, 1:4]
    dg[1:, 1:, 1:] = E2 * dh

    P = data[I_P]
    p = math.exp(-params.varsigma * bg.Omega) * P
    cache = build_cache(g, dg, data[I_U:I_U + 3], w, p=p, cs2=params.cs2)

    return Slice(
        state=state,
        params=params,
        bg=bg,
        grid=grid,
        E2=E2,
        cache=cache,
        h=h,
        kh=kh,
        dd_g00=dd_m[:, :, 0],
        dd_g0=dd_m[:, :, 1:4],
        dd_h=dd_m[:, :, 4:10][:, :, SYM_INDEX],
        dk00=d_k[:, 0],
        dk0=d_k[:, 1:4],
        dkh=d_k[:, 4:10][:, SYM_INDEX],
        dh=dh,
        P=P,
        dP=d_f[:, 0],
        u=data[I_U:I_U + 3],
        du=d_f[:, 1:4],
        p=p,
    )


@dataclass
class ErrorTerms:
    A00: np.ndarray
    A0: np.ndarray  # [j]
    Ajk: np.ndarray  # [j, k]
    C00: np.ndarray
    C0: np.ndarray  # [j]
    Dgamma: np.ndarray  # [alpha, mu, nu] = Delta^alpha_{mu nu}
    D00: np.ndarray
    D0: np.ndarray  # [j]
    Djk: np.ndarray  # [j, k]
    fluid: np.ndarray  # Delta
    fluid0: np.ndarray  # Delta^0
    fluidj: np.ndarray  # Delta^j
    prime: np.ndarray  # Delta'
    prime0: np.ndarray  # Delta'^0
    primej: np.ndarray  # Delta'^j
    du0: np.ndarray  # [c] = d_c u^0

    # named views of the Christoffel error blocks
    @property
    def gamma_000(self):
        return self.Dgamma[0, 0, 0]

    @property
    def gamma_0j0(self):
        return self.Dgamma[0, 1:, 0]

    @property
    def gamma_j00(self):
        return self.Dgamma[1:, 0, 0]

    @property
    def gamma_j0k(self):
        return self.Dgamma[1:, 0, 1:]

    @property
    def gamma_0jk(self):
        return self.Dgamma[0, 1:, 1:]

    @property
    def gamma_kij(self):
        return self.Dgamma[1:, 1:, 1:]


class _Parts:
    """Short names for the slices of (g, dg, ginv, Gamma) used in the formulas."""

    def __init__(self, sl: Slice):
        c = sl.cache
        g, dg, gi, Gl = c.g, c.dg, c.ginv, c.Gamma_low
        self.w = sl.omega
        self.E2 = sl.E2
        self.gi00 = gi[0, 0]
        self.gi0 = gi[0, 1:]  # g^{0a}
        self.gis = gi[1:, 1:]  # g^{ab}
        self.g00 = g[0, 0]
        self.g0 = g[0, 1:]  # g_{0a}
        self.gs = g[1:, 1:]
        self.dt00 = dg[0, 0, 0]
        self.dt0 = dg[0, 0, 1:]  # d_t g_{0a}
        self.dts = dg[0, 1:, 1:]  # d_t g_{ab}
        self.ds00 = dg[1:, 0, 0]  # [c] d_c g00
        self.ds0 = dg[1:, 0, 1:]  # [c, a] d_c g_{0a}
        self.dss = dg[1:, 1:, 1:]  # [c, a, b] d_c g_{ab}
        self.G000 = Gl[0, 0, 0]
        self.G00a = Gl[0, 0, 1:]  # Gamma_{00a}
        self.G0a0 = Gl[0, 1:, 0]  # Gamma_{0a0}
        self.Ga0b = Gl[1:, 0, 1:]  # Gamma_{a0b}
        self.G0ab = Gl[0, 1:, 1:]  # Gamma_{0ab}
        self.Gajb = Gl[1:, 1:, 1:]  # Gamma_{ajb}
        # under-braced combinations in h-variable form
        kh = sl.kh
        # M[a, l] = g^{ab} d_t g_{bl} - 2 omega delta^a_l
        self.M = self.E2 * E("ab...,bl...->al...", self.gis, kh) - 2.0 * self.w * self.gi0[:, None] * self.g0[None, :]
        # N[a, j] = d_t g_{aj} - 2 omega g_{aj}
        self.N = self.E2 * kh
        # S[a, l] = d_a g_{0l} + d_l g_{0a};  F[a, j] = d_a g_{0j} - d_j g_{0a}
        self.S = self.ds0 + np.swapaxes(self.ds0, 0, 1)
        self.F = self.ds0 - np.swapaxes(self.ds0, 0, 1)


def _delta_A00(q: _Parts):
    gi00, gi0, gis = q.gi00, q.gi0, q.gis
    dt00, dt0, ds00, ds0 = q.dt00, q.dt0, q.ds00, q.ds0
    G000, G00a, Ga0b = q.G000, q.G00a, q.Ga0b
    M, S = q.M, q.S
    out = gi00**2 * (dt00**2 - G000**2)
    out = out + gi00 * E("a...,a...->...", gi0, 2.0 * dt00 * (dt0 + ds00) - 4.0 * G000 * G00a)
    out = out + gi00 * (
        E("ab...,a...,b...->...", gis, dt0, dt0)
        + E("ab...,a...,b...->...", gis, ds00, ds00)
        - 2.0 * E("ab...,a...,b...->...", gis, G00a, G00a)
    )
    X = (
        2.0 * dt00 * ds0
        + 2.0 * ds00[:, None] * dt0[None, :]
        - 2.0 * G000 * Ga0b
        - 2.0 * G00a[None, :] * G00a[:, None]
    )
    out = out + E("a...,b...,ab...->...", gi0, gi0, X)
    # Y[a, b, l] = 2 d_t g_{0a} d_l g_{0b} + 2 d_b g_{00} d_a g_{0l} - 4 Gamma_{00a} Gamma_{l0b}
    Y = (
        2.0 * dt0[:, None, None] * np.swapaxes(ds0, 0, 1)[None, :, :]
        + 2.0 * ds00[None, :, None] * ds0[:, None, :]
        - 4.0 * G00a[:, None, None] * np.swapaxes(Ga0b, 0, 1)[None, :, :]
    )
    out = out + E("ab...,l...,abl...->...", gis, gi0, Y)
    out = out + E("ab...,lm...,al...,bm...->...", gis, gis, ds0, ds0)
    out = out + 0.5 * E("lm...,bl...,bm...->...", gis, M, S)
    out = out - 0.25 * E("ab...,lm...,al...,bm...->...", gis, gis, S, S)
    out = out - 0.25 * E("bl...,lb...->...", M, M)
    return out


def _delta_A0j(q: _Parts):
    gi00, gi0, gis, w = q.gi00, q.gi0, q.gis, q.w
    dt00, dt0, dts, ds00, ds0, dss = q.dt00, q.dt0, q.dts, q.ds00, q.ds0, q.dss
    G000, G00a, G0a0, Ga0b, G0ab, Gajb = q.G000, q.G00a, q.G0a0, q.Ga0b, q.G0ab, q.Gajb
    M, N, S = q.M, q.N, q.S
    sw = partial(np.swapaxes, axis1=0, axis2=1)

    out = gi00**2 * (dt00 * dt0 - G000 * G0a0)
    # Y[a, j]
    Y = (
        dt00 * (dts + ds0)
        + (dt0 + ds00)[:, None] * dt0[None, :]
        - 2.0 * G000 * sw(G0ab)
        - 2.0 * G00a[:, None] * G0a0[None, :]
    )
    out = out + gi00 * E("a...,aj...->j...", gi0, Y)
    out = out + gi00 * E("aj...,a...->j...", M, dt0 - 0.5 * ds00)
    out = out + 0.5 * gi00 * E("ab...,a...,bj...->j...", gis, ds00, S)
    # Z[a, b, j]
    Z = (
        dt00 * dss
        + dt0[None, :, None] * ds0[:, None, :]
        + ds00[:, None, None] * dts[None, :, :]
        + ds0[:, :, None] * dt0[None, None, :]
        - G000 * np.transpose(Gajb, (0, 2, 1) + tuple(range(3, Gajb.ndim)))
        - 2.0 * G00a[None, :, None] * sw(G0ab)[:, None, :]
        - Ga0b[:, :, None] * G0a0[None, None, :]
    )
    out = out + E("a...,b...,abj...->j...", gi0, gi0, Z)
    # terms with g^{ab} g^{0l}
    out = out + E("ab...,l...,a...,lbj...->j...", gis, gi0, dt0, dss)
    out = out + E("ab...,l...,la...,bj...->j...", gis, gi0, ds0, dts)
    out = out + E("ab...,l...,b...,alj...->j...", gis, gi0, ds00, dss)
    out = out + E("ab...,l...,bl...,aj...->j...", gis, gi0, ds0, ds0)
    out = out - 2.0 * E("ab...,l...,a...,ljb...->j...", gis, gi0, G00a, Gajb)
    out = out - E("ab...,l...,la...,jb...->j...", gis, gi0, S, G0ab)
    out = out + 0.5 * E("ab...,l...,la...,bj...->j...", gis, gi0, dts, q.F)
    out = out + w * E("a...,aj...->j...", gi0, N)
    out = out + 0.5 * E("l...,bl...,bj...->j...", gi0, M, dts)
    out = out + E("ab...,lm...,al...,bmj...->j...", gis, gis, ds0, dss)
    out = out - 0.5 * E("ab...,lm...,al...,bjm...->j...", gis, gis, S, Gajb)
    out = out + 0.5 * E("ab...,ma...,bjm...->j...", gis, M, Gajb)
    return out


def _delta_Ajk(q: _Parts):
    gi00, gi0, gis, w = q.gi00, q.gi0, q.gis, q.w
    dt0, dts, ds0, dss = q.dt0, q.dts, q.ds0, q.dss
    G0a0, G0ab, Gajb = q.G0a0, q.G0ab, q.Gajb
    M, N, F = q.M, q.N, q.F

    out = gi00**2 * (dt0[:, None] * dt0[None, :] - G0a0[:, None] * G0a0[None, :])
    # R2: g^{00} g^{0a} {...}[a, j, k]
    T = dt0[None, :, None] * (dts + ds0)[:, None, :] - 2.0 * G0a0[None, :, None] * np.swapaxes(G0ab, 0, 1)[:, None, :]
    R2 = T + np.swapaxes(T, 1, 2)
    out = out + gi00 * E("a...,ajk...->jk...", gi0, R2)
    out = out + gi00 * (
        E("ab...,aj...,bk...->jk...", gis, ds0, ds0) - 0.5 * E("ab...,aj...,bk...->jk...", gis, F, F)
    )
    out = out - 0.5 * gi00 * (E("bj...,bk...->jk...", M, F) + E("ak...,aj...->jk...", M, F))
    out = out - w * gi00 * E("k...,a...,aj...->jk...", q.g0, gi0, dts)
    out = out + 0.5 * gi00 * E("bj...,bk...->jk...", M, N)
    # R6: g^{0a} g^{0b} {...}
    out = out + E("a...,b...,j...,abk...->jk...", gi0, gi0, dt0, dss)
    out = out + E("a...,b...,bj...,ak...->jk...", gi0, gi0, dts, ds0)
    out = out + E("a...,b...,aj...,bk...->jk...", gi0, gi0, ds0, dts)
    out = out + E("a...,b...,abj...,k...->jk...", gi0, gi0, dss, dt0)
    out = out - E("a...,b...,j...,akb...->jk...", gi0, gi0, G0a0, Gajb)
    out = out - 2.0 * E("a...,b...,jb...,ka...->jk...", gi0, gi0, G0ab, G0ab)
    out = out - E("a...,b...,ajb...,k...->jk...", gi0, gi0, Gajb, G0a0)
    # R7: g^{ab} g^{0l} {...}
    out = out + E("ab...,l...,aj...,lbk...->jk...", gis, gi0, dts, dss)
    out = out + E("ab...,l...,laj...,bk...->jk...", gis, gi0, dss, dts)
    out = out + E("ab...,l...,bj...,alk...->jk...", gis, gi0, ds0, dss)
    out = out + E("ab...,l...,blj...,ak...->jk...", gis, gi0, dss, ds0)
    out = out - 2.0 * E("ab...,l...,ja...,lkb...->jk...", gis, gi0, G0ab, Gajb)
    out = out - 2.0 * E("ab...,l...,lja...,kb...->jk...", gis, gi0, Gajb, G0ab)
    # R8
    out = out + E("ab...,ml...,alj...,bmk...->jk...", gis, gis, dss, dss)
    out = out - E("ab...,ml...,ajl...,bkm...->jk...", gis, gis, Gajb, Gajb)
    return out


def _delta_C00(q: _Parts):
    gi00, gi0, gis, w = q.gi00, q.gi0, q.gis, q.w
    out = -6.0 / q.g00 * w**2 * ((q.g00 + 1.0) ** 2 - E("a...,a...->...", gi0, q.g0))
    out = out - w * (gi00 + 1.0) * E("aa...->...", q.M)
    out = out + 2.0 * w * (gi00 + 1.0) * E("ab...,ab...->...", gis, q.ds0)
    out = out + w * (gi00 + 1.0) * (gi00 - 1.0) * q.dt00
    out = out + 2.0 * w * gi00 * E("a...,a...->...", gi0, q.G0a0 + 2.0 * q.G00a)
    out = out + 4.0 * w * E("a...,b...,ab...->...", gi0, gi0, q.G0ab)
    out = out + 2.0 * w * E("ab...,l...,alb...->...", gis, gi0, q.Gajb)
    return out


def _delta_C0j(q: _Parts):
    w = q.w
    return 2.0 * w**2 * (q.gi00 + 1.0) * q.g0 - 2.0 * w * E("a...,aj...->j...", q.gi0, q.N + q.F)


def _delta_gamma(q: _Parts):
    """Delta^alpha_{mu nu} in the same layout as Gamma^alpha_{mu nu}."""
    gi00, gi0, gis, w = q.gi00, q.gi0, q.gis, q.w
    dt00, dt0, dts, ds00, ds0, dss = q.dt00, q.dt0, q.dts, q.ds00, q.ds0, q.dss
    M, N, F = q.M, q.N, q.F
    shape = (4, 4, 4) + dt00.shape
    D = np.empty(shape)
    D[0, 0, 0] = 0.5 * (gi00 * dt00 + 2.0 * E("a...,a...->...", gi0, dt0) - E("a...,a...->...", gi0, ds00))
    # 2 Delta^0_{j0} = g^00 d_j g00 + g^0a (d_j g_a0 - d_a g_j0) + 2 omega g^0a g_ja + g^0a N_aj
    D0j0 = 0.5 * (
        gi00 * ds00
        - E("a...,aj...->j...", gi0, F)
        + 2.0 * w * E("a...,ja...->j...", gi0, q.gs)
        + E("a...,aj...->j...", gi0, N)
    )
    D[0, 1:, 0] = D0j0
    D[0, 0, 1:] = D0j0
    D[1:, 0, 0] = 0.5 * (
        gi0 * dt00 + 2.0 * E("ja...,a...->j...", gis, dt0) - E("ja...,a...->j...", gis, ds00)
    )
    # 2 Delta^j_{0k} = g^{j0} d_k g00 + g^{ja} d_k g_0a - g^{ja} d_a g_0k + M[j, k]
    Dj0k = 0.5 * (gi0[:, None] * ds00[None, :] - E("ja...,ak...->jk...", gis, F) + M)
    D[1:, 0, 1:] = Dj0k
    D[1:, 1:, 0] = Dj0k
    # 2 Delta^0_{jk}
    Sjk = ds0 + np.swapaxes(ds0, 0, 1)
    # spatial[a, j, k] = d_j g_ak + d_k g_aj - d_a g_jk
    spatial = (
        np.transpose(dss, (1, 0, 2) + tuple(range(3, dss.ndim)))
        + np.transpose(dss, (1, 2, 0) + tuple(range(3, dss.ndim)))
        - dss
    )
    D[0, 1:, 1:] = 0.5 * (
        gi00 * Sjk
        + E("a...,ajk...->jk...", gi0, spatial)
        + N
        - 2.0 * (gi00 + 1.0) * w * q.gs
        - (gi00 + 1.0) * N
    )
    # 2 Delta^k_{ij} = g^{ka}(d_i g_aj + d_j g_ia - d_a g_ij) + g^{k0}(d_i g_0j + d_j g_0i - d_t g_ij)
    D[1:, 1:, 1:] = 0.5 * (
        E("ka...,aij...->kij...", gis, spatial)
        + gi0[:, None, None] * (Sjk - dts)[None, :, :]
    )
    return D


def _u0_gradient(sl: Slice):
    """d_c u^0 from differentiating g(u, u) = -1: -(u_b d_c u^b + 1/2 d_c g_ab u^a u^b) / u_0."""
    c = sl.cache
    u_up, u_low = c.u_up, c.u_low
    d_sp = c.dg[1:]
    term = E("b...,cb...->c...", u_low[1:], sl.du) + 0.5 * E("cab...,a...,b...->c...", d_sp, u_up, u_up)
    return -term / u_low[0]


def assemble_error_terms(sl: Slice) -> ErrorTerms:
    params, bg = sl.params, sl.bg
    cs2 = params.cs2
    H = params.H
    w = bg.omega
    dec = sl.decay
    pbar = params.p_bar
    c = sl.cache
    q = _Parts(sl)

    A00 = _delta_A00(q)
    A0 = _delta_A0j(q)
    Ajk = _delta_Ajk(q)
    C00 = _delta_C00(q)
    C0 = _delta_C0j(q)
    Dg = _delta_gamma(q)

    P = sl.P
    u_up, u_low, Pi = c.u_up, c.u_low, c.Pi
    g00, g0 = q.g00, q.g0
    gab_Gamma = E("ab...,ajb...->j...", q.gis, q.Gajb)

    D00 = 2.0 * (
        A00
        + C00
        - (3.0 * cs2 + 1.0) / (2.0 * cs2) * (g00 + 1.0) * dec * pbar
        - (3.0 * cs2 + 1.0) / (2.0 * cs2) * dec * (P - pbar)
        - (1.0 + cs2) / cs2 * (u_low[0] + 1.0) * (u_low[0] - 1.0) * dec * P
        - (1.0 - cs2) / (2.0 * cs2) * (g00 + 1.0) * dec * P
        + 2.5 * (w - H) * q.dt00
        + 3.0 * (w**2 - H**2) * (g00 + 1.0)
    )
    D0 = 2.0 * (
        A0
        + C0
        + (1.0 - 3.0 * cs2) / (4.0 * cs2) * dec * pbar * g0
        - (1.0 + cs2) / cs2 * dec * P * u_low[0] * u_low[1:]
        - (1.0 - cs2) / (2.0 * cs2) * dec * P * g0
        + 1.5 * (w - H) * q.dt0
        + (w**2 - H**2) * g0
        - (w - H) * gab_Gamma
    )
    Djk = 2.0 * (
        Ajk / sl.E2
        + (1.0 + cs2) / (2.0 * cs2) * pbar * dec * (q.gi00 + 1.0) * sl.h
        - 2.0 * w * E("a...,ajk...->jk...", q.gi0, sl.dh)
        - (1.0 - cs2) / (2.0 * cs2) * dec * (P - pbar) * sl.h
        - (1.0 + cs2) / cs2 / sl.E2 * dec * P * u_low[1:, None] * u_low[None, 1:]
        + 1.5 * (w - H) * sl.kh
    )

    # fluid
    dlt = params.delta_param
    u = sl.u
    u0 = u_up[0]
    trace0 = E("aa...->...", Dg[:, :, 0])  # Delta^alpha_{alpha 0}
    tracea = E("aab...->b...", Dg[:, :, 1:])  # Delta^alpha_{alpha a}
    dguu = E("ab...,a...,b...->...", c.dg[0], u_up, u_up)
    fluid = (
        -(1.0 + cs2) * P * trace0 * u0
        - (1.0 + cs2) * P * E("a...,a...->...", tracea, u)
        + (1.0 + cs2) * P / (2.0 * u_low[0]) * dguu
    )
    Duu = E("jab...,a...,b...->j...", Dg, u_up, u_up)
    fluidj = (dlt - 2.0) * w * (u0 - 1.0) * u + dlt * w * q.gi0 - Duu[1:]
    fluid0 = (
        dlt * w * ((u0 - 1.0) * (u0 + 1.0) + (q.gi00 + 1.0))
        - w * E("ab...,a...,b...->...", q.gs, u, u)
        - Duu[0]
    )

    kP = cs2 / ((1.0 + cs2) * P)
    coef = (1.0 + cs2) * P / (u_low[0] * u0)
    div_u = E("aa...->...", sl.du)
    bracket = (
        -E("a...,a...->...", u, sl.dP)
        - (1.0 + cs2) * P * div_u
        - coef * E("a...,b...,ab...->...", u, u_low[1:], sl.du)
        + cs2 / u0 * E("a...,a...->...", Pi[1:, 0], sl.dP)
        + coef * (dlt - 2.0) * w * E("a...,a...->...", u_low[1:], u)
        + fluid
        + coef * E("a...,a...->...", u_low[1:], fluidj)
    )
    denom = 1.0 - cs2 * Pi[0, 0] / u0**2
    bad = ~(np.abs(denom) > 1e-14)
    if np.any(bad):
        raise Breakdown(4, "fluid system lost hyperbolicity (det A^0 ~ 0)", first_bad(bad))
    prime = bracket / (u0 * denom)

    du0 = _u0_gradient(sl)
    prime0 = (
        fluid0
        - kP * Pi[0, 0] * prime
        - kP * E("a...,a...->...", Pi[0, 1:], sl.dP)
        - E("a...,a...->...", u, du0)
    ) / u0
    primej = (
        -Duu[1:]
        + dlt * w * q.gi0
        - kP * Pi[0, 1:] * prime
        - kP * E("aj...,a...->j...", Pi[1:, 1:], sl.dP)
        - E("a...,aj...->j...", u, sl.du)
    ) / u0

    return ErrorTerms(
        A00=A00, A0=A0, Ajk=Ajk, C00=C00, C0=C0, Dgamma=Dg,
        D00=D00, D0=D0, Djk=Djk,
        fluid=fluid, fluid0=fluid0, fluidj=fluidj,
        prime=prime, prime0=prime0, primej=primej, du0=du0,
    )


def principal_A(sl: Slice):
    """Principal parts of A_00, A_0j, A_jk (the terms that are not Delta_A)."""
    q = _Parts(sl)
    w = q.w
    A00 = 3.0 * w**2 - w * E("ab...,ab...->...", q.gis, q.dts) + 2.0 * w * E("ab...,ab...->...", q.gis, q.ds0)
    A0 = (
        2.0 * w * q.gi00 * q.dt0
        - 2.0 * w**2 * q.gi00 * q.g0
        - w * q.gi00 * q.ds00
        + w * E("ab...,ajb...->j...", q.gis, q.Gajb)
    )
    Ajk = 2.0 * w * q.gi00 * q.dts - 2.0 * w**2 * q.gi00 * q.gs
    return A00, A0, Ajk


def principal_gamma(sl: Slice) -> np.ndarray:
    """Principal part of Gamma^alpha_{mu nu}: omega g_jk in the (0, j, k) block, omega delta in (j, 0, k)."""
    w = sl.omega
    g = sl.cache.g
    out = np.zeros_like(sl.cache.Gamma_up)
    out[0, 1:, 1:] = w * g[1:, 1:]
    for j in range(3):
        out[1 + j, 0, 1 + j] = w
        out[1 + j, 1 + j, 0] = w
    return out


def metric_rhs(sl: Slice, err: ErrorTerms):
    """d_t k00, d_t k0j, d_t k_jk."""
    H = sl.params.H
    gi = sl.cache.ginv
    gi00, gi0, gis = gi[0, 0], gi[0, 1:], gi[1:, 1:]
    bad = ~(gi00 < 0)
    if np.any(bad):
        raise Breakdown(1, "g^00 >= 0", first_bad(bad))
    st = sl.state
    Gajb = sl.cache.Gamma_low[1:, 1:, 1:]

    lap00 = E("ab...,ab...->...", gis, sl.dd_g00)
    adv00 = 2.0 * E("a...,a...->...", gi0, sl.dk00)
    dk00 = (5.0 * H * st.k00 + 6.0 * H**2 * (st.g00 + 1.0) + err.D00 - lap00 - adv00) / gi00

    lap0 = E("ab...,abj...->j...", gis, sl.dd_g0)
    adv0 = 2.0 * E("a...,aj...->j...", gi0, sl.dk0)
    dk0 = (
        3.0 * H * st.k0
        + 2.0 * H**2 * st.g0
        - 2.0 * H * E("ab...,ajb...->j...", gis, Gajb)
        + err.D0
        - lap0
        - adv0
    ) / gi00

    laph = E("ab...,abjk...->jk...", gis, sl.dd_h)
    advh = 2.0 * E("a...,ajk...->jk...", gi0, sl.dkh)
    dkh = (3.0 * H * sl.kh + err.Djk - laph - advh) / gi00
    return dk00, dk0, dkh


def fluid_rhs(sl: Slice, err: ErrorTerms):
    """d_t P and d_t u^j."""
    w = sl.omega
    dlt = sl.params.delta_param
    return err.prime, (dlt - 2.0) * w * sl.u + err.primej


def full_rhs(state: FieldState, params: BackgroundParams, grid: Grid, return_slice: bool = False):
    """Time derivative of the packed state array (same layout as FieldState.data)."""
    sl = slice_geometry(state, params, grid)
    err = assemble_error_terms(sl)
    dk00, dk0, dkh = metric_rhs(sl, err)
    dP, du = fluid_rhs(sl, err)
    out = np.empty_like(state.data)
    out[I_G00] = state.k00
    out[I_G0:I_G0 + 3] = state.k0
    out[I_H:I_H + 6] = state.data[I_KH:I_KH + 6]
    out[I_K00] = dk00
    out[I_K0:I_K0 + 3] = dk0
    out[I_KH:I_KH + 6] = np.stack([dkh[a, b] for a, b in SYM_PAIRS])
    out[I_P] = dP
    out[I_U:I_U + 3] = du
    if grid.dealias:
        out = grid.filter(out)
    if return_slice:
        return out, sl, err
    return out


@dataclass
class FluidSystemView:
    W: np.ndarray  # (4, ...)
    b: np.ndarray
    b_delta: np.ndarray
    A: np.ndarray  # (4, 4, 4, ...), A[mu] is the matrix A^mu
    A0_inv: np.ndarray  # (4, 4, ...)
    det_A0: np.ndarray


def fluid_matrices(sl: Slice, err: ErrorTerms | None = None) -> FluidSystemView:
    cs2 = sl.params.cs2
    c = sl.cache
    P = sl.P
    u_up, u_low, Pi = c.u_up, c.u_low, c.Pi
    u0 = u_up[0]
    if np.any(~(u0 > 0)):
        raise Breakdown(4, "u^0 is not positive", first_bad(~(u0 > 0)))
    kP = cs2 / ((1.0 + cs2) * P)
    A = np.zeros((4, 4, 4) + P.shape)
    A[0, 0, 0] = u0
    for j in range(3):
        A[0, 0, 1 + j] = -(1.0 + cs2) * P * u_low[1 + j] / u_low[0]
        A[0, 1 + j, 0] = kP * Pi[1 + j, 0]
        A[0, 1 + j, 1 + j] = u0
    for a in range(3):
        Aa = A[1 + a]
        Aa[0, 0] = u_up[1 + a]
        Aa[0, 1 + a] = (1.0 + cs2) * P
        for j in range(3):
            Aa[1 + j, 0] = kP * Pi[1 + j, 1 + a]
            Aa[1 + j, 1 + j] = u_up[1 + a]

    D = u0**2 - cs2 * Pi[0, 0]
    inv = np.empty((4, 4) + P.shape)
    inv[0, 0] = u0
    ratio = cs2 / (u_low[0] * u0)
    for j in range(3):
        inv[0, 1 + j] = (1.0 + cs2) * P * u_low[1 + j] / u_low[0]
        inv[1 + j, 0] = -kP * Pi[1 + j, 0]
        for k in range(3):
            if j == k:
                others = [m for m in range(3) if m != j]
                inv[1 + j, 1 + k] = u0 + ratio * sum(Pi[1 + m, 0] * u_low[1 + m] for m in others)
            else:
                inv[1 + j, 1 + k] = -ratio * Pi[1 + j, 0] * u_low[1 + k]
    inv = inv / D
    det = u0**2 * D

    W = np.concatenate([(P - sl.params.p_bar)[None], sl.u])
    w = sl.omega
    b = np.zeros_like(W)
    b[1:] = (sl.params.delta_param - 2.0) * w * sl.u
    if err is None:
        err = assemble_error_terms(sl)
    b_delta = np.concatenate([err.fluid[None], err.fluidj])
    return FluidSystemView(W=W, b=b, b_delta=b_delta, A=A, A0_inv=inv, det_A0=det)
