"""Machine-precision checks of the transcribed decomposition identities.

Each check evaluates one identity on a random band-limited state, once from
first principles (direct Christoffels, A_{mu nu} from its defining contraction,
Ricci from second derivatives) and once through the production error terms in
``reduced_system``, and reports the largest relative residual over the grid.

``mutate=True`` flips the sign of one term on the production side (the term is
recomputed here, so production code carries no test hooks); every check must
then fail.  That is the evidence that the check is sensitive at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .background import BackgroundParams
from .fields import FieldState
from .grid import Grid
from .reduced_system import (
    Slice,
    assemble_error_terms,
    fluid_matrices,
    full_rhs,
    principal_A,
    principal_gamma,
    slice_geometry,
)
from .tensor import einsum as E


DEFAULT_PARAMS = BackgroundParams(Lambda=3.0, cs2=1.0 / 9.0, rho_bar=3.0)
ALGEBRAIC_TOL = 1e-10
SPECTRAL_TOL = 1e-9
EOV_TOL = 1e-6


@dataclass
class IdentityReport:
    name: str
    residual: float
    tolerance: float
    seed: int | None = None
    detail: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        if not (self.residual >= 0 or math.isnan(self.residual)):
            raise ValueError("residual must be non-negative")
        self.passed = bool(math.isfinite(self.residual) and self.residual <= self.tolerance)

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        seed = "-" if self.seed is None else str(self.seed)
        return f"{self.name:34s} seed={seed:>4s}  residual={self.residual:.3e}  tol={self.tolerance:.0e}  {mark}"


# ---- random states ---------------------------------------------------------


def random_state(
    seed: int,
    n: int = 16,
    amplitude: float = 0.1,
    t: float = 0.5,
    params: BackgroundParams = DEFAULT_PARAMS,
    kmax: int | None = None,
    u_amplitude: float | None = None,
) -> tuple[FieldState, Grid]:
    """Every evolved field perturbed by an independent band-limited field of sup `amplitude`."""
    grid = Grid(n, dealias=False)
    kmax = n // 4 if kmax is None else kmax
    rng = np.random.default_rng(seed)
    r = partial(grid.random_field, rng, kmax)
    eps = amplitude
    ua = eps if u_amplitude is None else u_amplitude

    def sym(scale):
        out = np.empty((3, 3) + grid.shape)
        for a in range(3):
            for b in range(a, 3):
                out[a, b] = r(scale)
                out[b, a] = out[a, b]
        return out

    eye = np.zeros((3, 3) + grid.shape)
    for j in range(3):
        eye[j, j] = 1.0
    state = FieldState.from_components(
        t,
        g00=-1.0 + r(eps),
        g0=np.stack([r(eps) for _ in range(3)]),
        h=eye + sym(eps),
        k00=r(eps),
        k0=np.stack([r(eps) for _ in range(3)]),
        kh=sym(eps),
        P=params.p_bar * (1.0 + r(eps)),
        u=np.stack([r(ua) for _ in range(3)]),
    )
    return state, grid


def _slice(seed, n, params, **kw) -> Slice:
    state, grid = random_state(seed, n=n, params=params, **kw)
    return slice_geometry(state, params, grid)


def _rel(diff, ref):
    """Largest |diff| relative to the sup of the reference block."""
    scale = float(np.max(np.abs(ref)))
    worst = float(np.max(np.abs(diff)))
    if scale == 0.0:
        return 0.0 if worst == 0.0 else math.inf
    return worst / scale


def _rel_blocks(pairs, floor_fraction=1e-6, natural=0.0):
    """Max over blocks of per-block relative residuals.

    Each block is scaled at least by floor_fraction times the overall scale (blocks
    that vanish identically on the reference side would otherwise divide by zero)
    and at least by `natural`, the size of the individual terms of an equation
    whose sum may cancel to roundoff, as it does on FLRW.
    """
    overall = max(float(np.max(np.abs(ref))) for _, ref in pairs)
    out = 0.0
    for diff, ref in pairs:
        scale = max(float(np.max(np.abs(ref))), floor_fraction * overall, natural)
        if scale == 0.0:
            if np.max(np.abs(diff)) != 0.0:
                return math.inf
            continue
        out = max(out, float(np.max(np.abs(diff))) / scale)
    return out


# ---- first-principles oracles ----------------------------------------------


def _memo(sl: Slice, key, fn):
    """Per-slice memo so that a check and its mutated twin share the expensive pieces."""
    store = sl.__dict__.setdefault("_lab_memo", {})
    if key not in store:
        store[key] = fn()
    return store[key]


def _err(sl: Slice):
    return _memo(sl, "err", lambda: assemble_error_terms(sl))


def direct_A(sl: Slice) -> np.ndarray:
    """A_{mu nu} = g^{ab} g^{kl} [d_a g_{nu k} d_b g_{mu l} - Gamma_{a nu k} Gamma_{b mu l}]."""
    return _memo(sl, "A", lambda: _direct_A(sl))


def _direct_A(sl: Slice) -> np.ndarray:
    c = sl.cache
    gi, dg, Gl = c.ginv, c.dg, c.Gamma_low
    return E("ab...,kl...,ank...,bml...->mn...", gi, gi, dg, dg) - E(
        "ab...,kl...,ank...,bml...->mn...", gi, gi, Gl, Gl
    )


def second_derivative_jet(sl: Slice, dtt: np.ndarray) -> np.ndarray:
    """d2g[lam, kap, mu, nu] = d_lam d_kap g_{mu nu}; d_t^2 g is the supplied `dtt`."""
    E2, w = sl.E2, sl.omega
    shape = sl.cache.g.shape[2:]
    d2 = np.empty((4, 4, 4, 4) + shape)
    # spatial-spatial
    d2[1:, 1:, 0, 0] = sl.dd_g00
    d2[1:, 1:, 0, 1:] = sl.dd_g0
    d2[1:, 1:, 1:, 0] = sl.dd_g0
    d2[1:, 1:, 1:, 1:] = E2 * sl.dd_h
    # time-space: spatial derivatives of d_t g
    mixed = np.empty((3, 4, 4) + shape)
    mixed[:, 0, 0] = sl.dk00
    mixed[:, 0, 1:] = sl.dk0
    mixed[:, 1:, 0] = sl.dk0
    mixed[:, 1:, 1:] = E2 * (sl.dkh + 2.0 * w * sl.dh)
    d2[0, 1:] = mixed
    d2[1:, 0] = mixed
    d2[0, 0] = dtt
    return d2


def ricci_forms(sl: Slice, dtt: np.ndarray):
    """(Ric + sym D Q, second-line form, lemma form) as (4, 4, ...) arrays."""
    c = sl.cache
    g, gi, dg, Gl, Gu = c.g, c.ginv, c.dg, c.Gamma_low, c.Gamma_up
    w = sl.omega
    d2 = second_derivative_jet(sl, dtt)
    shape = g.shape[2:]

    dgi = -E("ar...,ls...,krs...->kal...", gi, gi, dg)
    dGl = 0.5 * (
        d2
        + np.transpose(d2, (0, 3, 2, 1) + tuple(range(4, d2.ndim)))
        - np.transpose(d2, (0, 2, 1, 3) + tuple(range(4, d2.ndim)))
    )  # dGl[k, m, l, n] = d_k Gamma_{m l n}
    dGu = E("kal...,mln...->kamn...", dgi, Gl) + E("al...,kmln...->kamn...", gi, dGl)
    ric = (
        E("aamn...->mn...", dGu)
        - E("naam...->mn...", dGu)
        + E("aal...,lmn...->mn...", Gu, Gu)
        - E("anl...,lam...->mn...", Gu, Gu)
    )

    dw = np.zeros((4,) + shape)
    dw[0] = sl.bg.omega_dot
    Gc = E("bg...,bng...->n...", gi, Gl)  # Gamma_nu
    dGc = E("kbg...,bng...->kn...", dgi, Gl) + E("bg...,kbng...->kn...", gi, dGl)
    P_low = 3.0 * w * g[0]
    dP_low = 3.0 * dw[:, None] * g[0][None] + 3.0 * w * dg[:, 0]
    Q_low = P_low - Gc
    dQ = dP_low - dGc

    def sym_cov(dX, X):
        D = dX - E("amn...,a...->mn...", Gu, X)
        return 0.5 * (D + np.swapaxes(D, 0, 1))

    lhs = ric + sym_cov(dQ, Q_low)
    box = E("ab...,abmn...->mn...", gi, d2)
    quad = (
        E("ab...,gd...,agm...,bdn...->mn...", gi, gi, Gl, Gl)
        + E("ab...,gd...,agm...,bnd...->mn...", gi, gi, Gl, Gl)
        + E("ab...,gd...,agn...,bmd...->mn...", gi, gi, Gl, Gl)
    )
    second = -0.5 * box + sym_cov(dP_low, P_low) + quad
    g0dw = g[0][:, None] * dw[None, :]
    lemma = -0.5 * box + 1.5 * (g0dw + np.swapaxes(g0dw, 0, 1)) + 1.5 * w * dg[0] + direct_A(sl)
    return lhs, second, lemma


# ---- checks ----------------------------------------------------------------


def check_christoffel_decomposition(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    err = _err(sl)
    decomposed = principal_gamma(sl) + err.Dgamma
    if mutate:
        gi = sl.cache.ginv
        # sign error in the g^{00} d_t g00 term of Delta^0_00
        decomposed = decomposed.copy()
        decomposed[0, 0, 0] -= 2.0 * 0.5 * gi[0, 0] * sl.cache.dg[0, 0, 0]
    direct = sl.cache.Gamma_up
    blocks = [
        (slice(0, 1), slice(0, 1), slice(0, 1)),
        (slice(0, 1), slice(1, 4), slice(0, 1)),
        (slice(1, 4), slice(0, 1), slice(0, 1)),
        (slice(1, 4), slice(0, 1), slice(1, 4)),
        (slice(0, 1), slice(1, 4), slice(1, 4)),
        (slice(1, 4), slice(1, 4), slice(1, 4)),
    ]
    pairs = [(decomposed[b] - direct[b], direct[b]) for b in blocks]
    return IdentityReport("christoffel_decomposition", _rel_blocks(pairs), ALGEBRAIC_TOL, seed)


def check_A_decomposition(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    err = _err(sl)
    P00, P0j, Pjk = principal_A(sl)
    A00 = P00 + err.A00
    if mutate:
        gis = sl.cache.ginv[1:, 1:]
        ds0 = sl.cache.dg[1:, 0, 1:]
        A00 = A00 - 2.0 * E("ab...,lm...,al...,bm...->...", gis, gis, ds0, ds0)
    A = direct_A(sl)
    pairs = [
        (A00 - A[0, 0], A[0, 0]),
        (P0j + err.A0 - A[0, 1:], A[0, 1:]),
        (Pjk + err.Ajk - A[1:, 1:], A[1:, 1:]),
    ]
    return IdentityReport("A_decomposition", _rel_blocks(pairs), ALGEBRAIC_TOL, seed)


def check_A_plus_I(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    err = _err(sl)
    c = sl.cache
    w = sl.omega
    g = c.g
    A = direct_A(sl)
    Gamma_up_c = c.Gamma_contracted  # Gamma^mu
    Gamma_low_c = E("ma...,a...->m...", g, Gamma_up_c)  # Gamma_mu
    lhs00 = A[0, 0] + 2.0 * w * Gamma_up_c[0] - 6.0 * w**2
    C00 = err.C00
    if mutate:
        gi0 = c.ginv[0, 1:]
        C00 = C00 - 2.0 * 4.0 * w * E("a...,b...,ab...->...", gi0, gi0, c.Gamma_low[0, 1:, 1:])
    rhs00 = w * c.dg[0, 0, 0] + 3.0 * w**2 * (g[0, 0] + 1.0) + 3.0 * w**2 * g[0, 0] + err.A00 + C00
    lhs0j = A[0, 1:] + 2.0 * w * (3.0 * w * g[0, 1:] - Gamma_low_c[1:])
    rhs0j = (
        4.0 * w**2 * g[0, 1:]
        - w * E("ab...,ajb...->j...", c.ginv[1:, 1:], c.Gamma_low[1:, 1:, 1:])
        + err.A0
        + err.C0
    )
    pairs = [(lhs00 - rhs00, lhs00), (lhs0j - rhs0j, lhs0j)]
    return IdentityReport("A_plus_I", _rel_blocks(pairs), ALGEBRAIC_TOL, seed)


def check_ricci_hat(sl: Slice, seed=None, mutate=False, rng=None) -> IdentityReport:
    """Ric + (D Q) symmetrized = second line = lemma form, with an arbitrary manufactured d_t^2 g."""
    rng = np.random.default_rng(seed if seed is not None else 0) if rng is None else rng
    shape = sl.cache.g.shape[2:]
    dtt = rng.standard_normal((4, 4) + shape) * 0.1
    dtt = 0.5 * (dtt + np.swapaxes(dtt, 0, 1))
    lhs, second, lemma = _memo(sl, ("ricci", seed), lambda: ricci_forms(sl, dtt))
    if mutate:
        lemma = lemma - 2.0 * 1.5 * sl.omega * sl.cache.dg[0]
    pairs = [(lhs - second, second), (second - lemma, second)]
    return IdentityReport("ricci_hat", _rel_blocks(pairs), SPECTRAL_TOL, seed)


def h_equation_forms(sl: Slice, err=None):
    """Right-hand sides of the box h_jk equation in four equivalent arrangements.

    F0: from the R-hat_jk equation with A_jk from its definition,
    F1, F2: the two intermediate arrangements with Delta_A,jk,
    F3: 3 H d_t h + Delta_jk (what the evolution uses).
    """
    err = _err(sl) if err is None else err
    params, bg = sl.params, sl.bg
    cs2, Lam, H = params.cs2, params.Lambda, params.H
    w, wd = bg.omega, bg.omega_dot
    c = sl.cache
    g, gi, dg = c.g, c.ginv, c.dg
    u_low = c.u_low
    E2 = sl.E2
    dec = sl.decay
    p = sl.p
    P, pbar = sl.P, params.p_bar
    h, kh = sl.h, sl.kh
    gs = g[1:, 1:]
    uu = u_low[1:, None] * u_low[None, 1:]
    advect = E("a...,ajk...->jk...", gi[0, 1:], sl.dh)

    A = direct_A(sl)
    box_g = 2.0 * (
        1.5 * w * dg[0, 1:, 1:]
        + A[1:, 1:]
        - Lam * gs
        - p * ((1.0 + cs2) / cs2 * uu + (1.0 - cs2) / (2.0 * cs2) * gs)
    )
    F0 = box_g / E2 - gi[0, 0] * (4.0 * w * kh + (4.0 * w**2 + 2.0 * wd) * h) - 4.0 * w * advect

    F1 = (
        3.0 * w * kh
        + 2.0 * (3.0 * w**2 + wd - Lam) * h
        - 4.0 * w * advect
        + 2.0 / E2 * err.Ajk
        - 2.0 * wd * (gi[0, 0] + 1.0) * h
        - 2.0 * (1.0 + cs2) / cs2 / E2 * dec * P * uu
        - (1.0 - cs2) / cs2 * dec * P * h
    )
    F2 = (
        3.0 * w * kh
        - (1.0 - cs2) / cs2 * dec * (P - pbar) * h
        - 4.0 * w * advect
        + 2.0 / E2 * err.Ajk
        + (1.0 + cs2) / cs2 * pbar * dec * (gi[0, 0] + 1.0) * h
        - 2.0 * (1.0 + cs2) / cs2 / E2 * dec * P * uu
    )
    F3 = 3.0 * H * kh + err.Djk
    return F0, F1, F2, F3


def _equation_scale(sl: Slice) -> float:
    return sl.params.Lambda + 3.0 * sl.omega**2


def check_h_equation_equivalence(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    F0, F1, F2, F3 = _memo(sl, "hforms", lambda: h_equation_forms(sl))
    if mutate:
        advect = E("a...,ajk...->jk...", sl.cache.ginv[0, 1:], sl.dh)
        F3 = F3 + 2.0 * 4.0 * sl.omega * advect
    pairs = [(F1 - F0, F0), (F2 - F0, F0), (F3 - F0, F0)]
    res = _rel_blocks(pairs, natural=_equation_scale(sl))
    return IdentityReport("h_equation_equivalence", res, SPECTRAL_TOL, seed)


def metric_equation_forms(sl: Slice, err=None):
    """(direct, decomposed) right-hand sides of the box g00 and box g0j equations."""
    err = _err(sl) if err is None else err
    params, bg = sl.params, sl.bg
    cs2, Lam, H = params.cs2, params.Lambda, params.H
    w, wd = bg.omega, bg.omega_dot
    c = sl.cache
    g, dg = c.g, c.dg
    u_low = c.u_low
    p = sl.p
    A = direct_A(sl)
    Gu_c = c.Gamma_contracted
    Gl_c = E("ma...,a...->m...", g, Gu_c)
    k1 = (1.0 + cs2) / cs2
    k2 = (1.0 - cs2) / (2.0 * cs2)
    d00 = 2.0 * (
        3.0 * g[0, 0] * wd
        + 1.5 * w * dg[0, 0, 0]
        + A[0, 0]
        + 2.0 * w * Gu_c[0]
        - 6.0 * w**2
        - Lam * g[0, 0]
        - p * (k1 * u_low[0] ** 2 + k2 * g[0, 0])
    )
    d0j = 2.0 * (
        1.5 * g[0, 1:] * wd
        + 1.5 * w * dg[0, 0, 1:]
        + A[0, 1:]
        - 2.0 * w * (Gl_c[1:] - 3.0 * w * g[0, 1:])
        - Lam * g[0, 1:]
        - p * (k1 * u_low[0] * u_low[1:] + k2 * g[0, 1:])
    )
    st = sl.state
    Gajb = c.Gamma_low[1:, 1:, 1:]
    r00 = 5.0 * H * st.k00 + 6.0 * H**2 * (st.g00 + 1.0) + err.D00
    r0j = (
        3.0 * H * st.k0
        + 2.0 * H**2 * st.g0
        - 2.0 * H * E("ab...,ajb...->j...", c.ginv[1:, 1:], Gajb)
        + err.D0
    )
    return (d00, r00), (d0j, r0j)


def check_metric_equation_equivalence(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    (d00, r00), (d0j, r0j) = _memo(sl, "mforms", lambda: metric_equation_forms(sl))
    if mutate:
        r00 = r00 - 2.0 * 2.0 * 3.0 * (sl.omega**2 - sl.params.H**2) * (sl.state.g00 + 1.0)
    pairs = [(r00 - d00, d00), (r0j - d0j, d0j)]
    res = _rel_blocks(pairs, natural=_equation_scale(sl))
    return IdentityReport("metric_equation_equivalence", res, SPECTRAL_TOL, seed)


def check_A0_inverse(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    fv = _memo(sl, "fv", lambda: fluid_matrices(sl, _err(sl)))
    A0 = fv.A[0]
    inv = fv.A0_inv
    if mutate:
        c = sl.cache
        cs2 = sl.params.cs2
        D = c.u_up[0] ** 2 - cs2 * c.Pi[0, 0]
        inv = inv.copy()
        inv[0, 1] -= 2.0 * (1.0 + cs2) * sl.P * c.u_low[1] / c.u_low[0] / D
    prod = E("ik...,kj...->ij...", inv, A0)
    eye = np.zeros_like(prod)
    for i in range(4):
        eye[i, i] = 1.0
    r_inv = float(np.max(np.abs(prod - eye)))
    m = np.moveaxis(A0, (0, 1), (-2, -1))
    det_lu = np.linalg.det(m)
    r_det = _rel(fv.det_A0 - det_lu, det_lu)
    cond = float(np.max(np.linalg.cond(m)))
    return IdentityReport(
        "A0_inverse", max(r_inv, r_det), ALGEBRAIC_TOL, seed, detail=f"max cond(A0)={cond:.3g}"
    )


def check_fluid_system(sl: Slice, seed=None, mutate=False) -> IdentityReport:
    """d_t P, d_t u^j, d_t u^0 from the evolution equations satisfy A^mu d_mu W = b + b_Delta
    and the time derivative of the normalization g(u, u) = -1."""
    from .reduced_system import fluid_rhs

    err = _err(sl)
    fv = _memo(sl, "fv", lambda: fluid_matrices(sl, err))
    dP, du = fluid_rhs(sl, err)
    if mutate:
        du = du - 2.0 * (sl.params.delta_param - 2.0) * sl.omega * sl.u
    dtW = np.concatenate([dP[None], du])
    dW = np.concatenate([sl.dP[:, None], sl.du], axis=1)
    lhs = E("ij...,j...->i...", fv.A[0], dtW) + sum(
        E("ij...,j...->i...", fv.A[1 + a], dW[a]) for a in range(3)
    )
    rhs = fv.b + fv.b_delta
    c = sl.cache
    dtu = np.concatenate([err.prime0[None], du])
    norm_dt = 2.0 * E("mn...,m...,n...->...", c.g, c.u_up, dtu) + E("mn...,m...,n...->...", c.dg[0], c.u_up, c.u_up)
    pairs = [(lhs - rhs, lhs), (norm_dt, dtu[0])]
    return IdentityReport("fluid_system", _rel_blocks(pairs, natural=sl.params.p_bar), ALGEBRAIC_TOL, seed)


POINTWISE_CHECKS = {
    "christoffel_decomposition": check_christoffel_decomposition,
    "A_decomposition": check_A_decomposition,
    "A_plus_I": check_A_plus_I,
    "ricci_hat": check_ricci_hat,
    "h_equation_equivalence": check_h_equation_equivalence,
    "A0_inverse": check_A0_inverse,
}
EXTRA_CHECKS = {
    "metric_equation_equivalence": check_metric_equation_equivalence,
    "fluid_system": check_fluid_system,
}


def check_eov_u0(
    seed: int | None = None,
    n: int = 16,
    alpha=(1, 0, 0),
    dt: float = 1e-4,
    params: BackgroundParams = DEFAULT_PARAMS,
    mutate: bool = False,
    state: FieldState | None = None,
    grid: Grid | None = None,
    amplitude: float = 0.1,
) -> IdentityReport:
    """Residual of the transport equation for the variation u'^0 = -(u_a/u_0) d_alpha u^a.

    Snapshots at t0 - dt, t0, t0 + dt come from explicit midpoint steps sharing
    the stage at t0 (the local error is odd in dt, so it enters the centered
    differences at O(dt^2) like their own truncation error); everything else is
    evaluated at t0.
    """
    from .diagnostics import eov_u0_terms

    if state is None:
        state, grid = random_state(0 if seed is None else seed, n=n, params=params, amplitude=amplitude)
    key = (tuple(alpha), dt, params)
    memo = state.__dict__.setdefault("_lab_memo", {})
    if key not in memo:
        snaps = _midpoint_pair(state, params, grid, dt)
        memo[key] = eov_u0_terms(snaps, params, grid, alpha)
    lhs, G0, flip = memo[key]
    if mutate:
        G0 = G0 + 2.0 * flip
    rel = _rel_blocks([(lhs - G0, np.concatenate([lhs[None], G0[None]]))])
    return IdentityReport("eov_u0", rel, EOV_TOL, seed, detail=f"alpha={tuple(alpha)} dt={dt:g}")


def _midpoint_pair(state, params, grid, dt):
    k1 = full_rhs(state, params, grid)

    def side(h):
        half = FieldState(state.t + 0.5 * h, state.data + 0.5 * h * k1)
        return FieldState(state.t + h, state.data + h * full_rhs(half, params, grid))

    return [side(-dt), state, side(dt)]


ALL_CHECKS = tuple(POINTWISE_CHECKS) + ("eov_u0",)


def run_checks(
    seeds,
    n: int = 16,
    params: BackgroundParams = DEFAULT_PARAMS,
    mutate: bool = False,
    names=None,
) -> list[IdentityReport]:
    reports, mutated = run_firewall(seeds, n, params, names, mutations=mutate)
    return mutated if mutate else reports


def run_firewall(
    seeds,
    n: int = 16,
    params: BackgroundParams = DEFAULT_PARAMS,
    names=None,
    mutations: bool = True,
):
    """Every requested check on every seed, plus (optionally) its sign-mutated twin
    evaluated from the same intermediate arrays.  Returns (reports, mutated)."""
    names = ALL_CHECKS if names is None else tuple(names)
    known = {**POINTWISE_CHECKS, **EXTRA_CHECKS}
    unknown = set(names) - set(known) - {"eov_u0"}
    if unknown:
        raise ValueError(f"unknown identity checks {sorted(unknown)}")
    reports, mutated = [], []
    for seed in seeds:
        state, grid = random_state(seed, n=n, params=params)
        sl = slice_geometry(state, params, grid)
        for name in names:
            if name == "eov_u0":
                run = partial(check_eov_u0, seed, params=params, state=state, grid=grid)
            else:
                run = partial(known[name], sl, seed=seed)
            reports.append(run())
            if mutations:
                mutated.append(run(mutate=True))
    return reports, mutated


def flrw_slice(params: BackgroundParams = DEFAULT_PARAMS, n: int = 16, t: float = 0.5) -> Slice:
    from .initial_data import flrw_state

    grid = Grid(n, dealias=False)
    return slice_geometry(flrw_state(params, grid, t=t), params, grid)


__all__ = [
    "IdentityReport",
    "random_state",
    "direct_A",
    "ricci_forms",
    "h_equation_forms",
    "metric_equation_forms",
    "run_checks",
    "run_firewall",
    "ALL_CHECKS",
    "flrw_slice",
] + [f"check_{k}" for k in {**POINTWISE_CHECKS, **EXTRA_CHECKS}] + ["check_eov_u0"]
