"""Pointwise tensor algebra on a slice.

Tensors are stored components-first: a metric is an array of shape (4, 4, n, n, n),
a Christoffel symbol (4, 4, 4, n, n, n), and so on.  Derivatives are passed in as
``dg[lam, mu, nu] = d_lam g_{mu nu}`` with ``lam = 0`` the time derivative.

Lowered Christoffels put the lowered index in the middle:
    Gamma_{mu alpha nu} = 1/2 (d_mu g_{alpha nu} + d_nu g_{alpha mu} - d_alpha g_{mu nu}),
    Gamma^alpha_{mu nu} = g^{alpha lam} Gamma_{mu lam nu}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Breakdown, first_bad


def sym3_inverse(G: np.ndarray):
    """Inverse and determinant of a field of symmetric 3x3 matrices (3, 3, ...)."""
    return kernels.sym3_inverse(G)


def invert_metric(g: np.ndarray):
    """Block inverse of a Lorentzian metric field.

    Returns (ginv, G_inv, d2) with G_inv the inverse of the spatial block and
    d2 = G_inv^{ab} g_{0a} g_{0b}.  Raises Breakdown(1) if g00 >= 0 and
    Breakdown(2) if the spatial block is not positive definite.
    """
    g00 = g[0, 0]
    bad = ~(g00 < 0)
    if np.any(bad):
        raise Breakdown(1, "g00 >= 0", first_bad(bad))
    G = g[1:, 1:]
    minor2 = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    G_inv, det = sym3_inverse(G)
    bad = ~((G[0, 0] > 0) & (minor2 > 0) & (det > 0))
    if np.any(bad):
        raise Breakdown(2, "spatial metric not positive definite", first_bad(bad))
    beta = g[0, 1:]
    Gb = np.einsum("ab...,b...->a...", G_inv, beta)
    d2 = np.einsum("a...,a...->...", beta, Gb)
    ginv = np.empty_like(g)
    g00_up = 1.0 / (g00 - d2)
    ginv[0, 0] = g00_up
    g0_up = Gb / (d2 - g00)
    ginv[0, 1:] = g0_up
    ginv[1:, 0] = g0_up
    ginv[1:, 1:] = G_inv + g00_up * Gb[:, None] * Gb[None, :]
    return ginv, G_inv, d2


def lu_inverse(g: np.ndarray) -> np.ndarray:
    """Direct 4x4 inversion at each point (test oracle only)."""
    m = np.moveaxis(g, (0, 1), (-2, -1))
    return np.moveaxis(np.linalg.inv(m), (-2, -1), (0, 1))


def christoffels(ginv: np.ndarray, dg: np.ndarray):
    """Lowered, raised and contracted Christoffel symbols."""
    lowered = 0.5 * (dg + dg.transpose((2, 1, 0) + tuple(range(3, dg.ndim)))
                     - dg.transpose((1, 0, 2) + tuple(range(3, dg.ndim))))
    raised = np.einsum("al...,mln...->amn...", ginv, lowered)
    contracted = np.einsum("ab...,mab...->m...", ginv, raised)
    return lowered, raised, contracted


def gauge_residual(g: np.ndarray, contracted: np.ndarray, omega: float):
    """Q^mu = 3 omega delta_0^mu - Gamma^mu and Q_mu = g_{mu alpha} Q^alpha."""
    Q_up = -contracted.copy()
    Q_up[0] += 3.0 * omega
    Q_low = np.einsum("ma...,a...->m...", g, Q_up)
    return Q_low, Q_up


def four_velocity_complete(g: np.ndarray, ginv: np.ndarray, u: np.ndarray):
    """Complete u^0 from the normalization g(u, u) = -1 with u^0 > 0.

    Returns (u_up, u_low, Pi) with u_up = (u^0, u^1, u^2, u^3) and
    Pi^{mu nu} = u^mu u^nu + g^{mu nu}.
    """
    g00 = g[0, 0]
    g0u = np.einsum("a...,a...->...", g[0, 1:], u)
    guu = np.einsum("ab...,a...,b...->...", g[1:, 1:], u, u)
    r = g0u / g00
    radicand = 1.0 + r * r - guu / g00 - (g00 + 1.0) / g00
    bad = ~(radicand > 0)
    if np.any(bad):
        raise Breakdown(4, "normalization radicand is not positive", first_bad(bad))
    u0 = -r + np.sqrt(radicand)
    bad = ~(u0 > 0)
    if np.any(bad):
        raise Breakdown(4, "u^0 is not positive", first_bad(bad))
    u_up = np.concatenate([u0[None], u])
    u_low = np.einsum("mn...,n...->m...", g, u_up)
    Pi = u_up[:, None] * u_up[None, :] + ginv
    return u_up, u_low, Pi


def stress_energy(g: np.ndarray, p: np.ndarray, u_low: np.ndarray, cs2: float) -> np.ndarray:
    """T_{mu nu} = ((1 + cs2)/cs2) p u_mu u_nu + p g_{mu nu}."""
    bad = ~(p > 0)
    if np.any(bad):
        raise Breakdown(3, "pressure is not positive", first_bad(bad))
    return (1.0 + cs2) / cs2 * p * u_low[:, None] * u_low[None, :] + p * g


@dataclass
class GeometryCache:
    g: np.ndarray
    dg: np.ndarray
    ginv: np.ndarray
    G_inv: np.ndarray
    d2: np.ndarray
    Gamma_low: np.ndarray
    Gamma_up: np.ndarray
    Gamma_contracted: np.ndarray
    Q_low: np.ndarray
    Q_up: np.ndarray
    u_up: np.ndarray
    u_low: np.ndarray
    Pi: np.ndarray
    T: np.ndarray | None


def build_cache(g, dg, u, omega, p=None, cs2=None) -> GeometryCache:
    ginv, G_inv, d2 = invert_metric(g)
    low, up, contr = christoffels(ginv, dg)
    Q_low, Q_up = gauge_residual(g, contr, omega)
    u_up, u_low, Pi = four_velocity_complete(g, ginv, u)
    T = None if p is None else stress_energy(g, p, u_low, cs2)
    return GeometryCache(g, dg, ginv, G_inv, d2, low, up, contr, Q_low, Q_up, u_up, u_low, Pi, T)


# ---- constraints ---------------------------------------------------------


@dataclass
class GeometricData:
    """Data on a spatial slice: 3-metric, second fundamental form, pressure, spatial velocity."""

    g: np.ndarray
    K: np.ndarray
    p: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        minor2 = self.g[0, 0] * self.g[1, 1] - self.g[0, 1] ** 2
        _, det = sym3_inverse(self.g)
        bad = ~((self.g[0, 0] > 0) & (minor2 > 0) & (det > 0))
        if np.any(bad):
            raise ValueError(f"3-metric is not positive definite at {tuple(first_bad(bad))}")
        if np.any(~(self.p > 0)):
            raise ValueError("pressure must be positive")


def spatial_christoffels(grid, g3: np.ndarray, g3_inv: np.ndarray):
    """gamma^k_{ij} of a 3-metric field and the spatial derivatives dg3[c, a, b]."""
    dg3 = np.stack([np.stack([grid.gradient(g3[a, b]) for b in range(3)]) for a in range(3)])
    dg3 = np.moveaxis(dg3, 2, 0)  # dg3[c, a, b] = d_c g_ab
    low = 0.5 * (dg3 + dg3.transpose((2, 1, 0, 3, 4, 5)) - dg3.transpose((1, 0, 2, 3, 4, 5)))
    return np.einsum("kl...,ilj...->kij...", g3_inv, low), dg3


def scalar_curvature(grid, g3: np.ndarray, g3_inv: np.ndarray, gam: np.ndarray | None = None):
    if gam is None:
        gam, _ = spatial_christoffels(grid, g3, g3_inv)
    dgam = np.stack([grid.gradient(gam[k, i, j]) for k in range(3) for i in range(3) for j in range(3)])
    dgam = dgam.reshape((3, 3, 3, 3) + g3.shape[2:])  # dgam[k, i, j, c] = d_c gamma^k_ij
    ric = (
        np.einsum("kijk...->ij...", dgam)
        - np.einsum("kikj...->ij...", dgam)
        + np.einsum("kkl...,lij...->ij...", gam, gam)
        - np.einsum("kjl...,lik...->ij...", gam, gam)
    )
    return np.einsum("ij...,ij...->...", g3_inv, ric)


def matter_sources(data: GeometricData, cs2: float):
    """T00 and T0j on a slice with unit normal d_t, from p and the spatial velocity."""
    uu = np.einsum("ab...,a...,b...->...", data.g, data.u, data.u)
    u0_low = -np.sqrt(1.0 + uu)
    u_low = np.einsum("ab...,b...->a...", data.g, data.u)
    c = (1.0 + cs2) / cs2
    return c * data.p * u0_low**2 - data.p, c * data.p * u0_low * u_low


def constraint_residuals(data: GeometricData, grid, Lambda: float, cs2: float, sources=None):
    """Gauss and Codazzi residuals.

    gauss   = R - K_ab K^ab + (tr K)^2 - 2 T_nn - 2 Lambda
    codazzi = D^a K_aj - g^ab D_j K_ab - T_nj

    The Lambda term is included so that exact FLRW data have zero residual.
    ``sources`` may supply (T_nn, T_nj) directly; otherwise they are built from
    (p, u) assuming the slice normal is d_t.
    """
    g_inv, _ = sym3_inverse(data.g)
    gam, _ = spatial_christoffels(grid, data.g, g_inv)
    R = scalar_curvature(grid, data.g, g_inv, gam)
    K = data.K
    K_up = np.einsum("ac...,bd...,cd...->ab...", g_inv, g_inv, K)
    KK = np.einsum("ab...,ab...->...", K, K_up)
    trK = np.einsum("ab...,ab...->...", g_inv, K)
    T_nn, T_nj = matter_sources(data, cs2) if sources is None else sources
    gauss = R - KK + trK**2 - 2.0 * T_nn - 2.0 * Lambda

    dK = np.stack([np.stack([grid.gradient(K[a, b]) for b in range(3)]) for a in range(3)])
    dK = np.moveaxis(dK, 2, 0)  # dK[c, a, b] = d_c K_ab
    DK = (
        dK
        - np.einsum("dca...,db...->cab...", gam, K)
        - np.einsum("dcb...,ad...->cab...", gam, K)
    )  # DK[c, a, b] = D_c K_ab
    div = np.einsum("ac...,caj...->j...", g_inv, DK)
    grad_tr = np.einsum("ab...,jab...->j...", g_inv, DK)
    codazzi = div - grad_tr - T_nj
    return gauss, codazzi


def slice_data(cache: GeometryCache, grid, P_phys: np.ndarray, cs2: float):
    """Induced data (g_jk, K_jk) and normal matter sources for a general slice t = const.

    K_jk = (d_t g_jk - D_j beta_k - D_k beta_j) / (2 N), N = (-g^00)^(-1/2),
    with beta_j = g_0j.  Returns (GeometricData, (T_nn, T_nj)).
    """
    g3 = cache.g[1:, 1:]
    g3_inv = cache.G_inv
    gam, _ = spatial_christoffels(grid, g3, g3_inv)
    beta = cache.g[0, 1:]
    dbeta = np.stack([grid.gradient(beta[k]) for k in range(3)])  # dbeta[k, j] = d_j beta_k
    Dbeta = np.moveaxis(dbeta, 0, 1) - np.einsum("ljk...,l...->jk...", gam, beta)  # D_j beta_k
    lapse = 1.0 / np.sqrt(-cache.ginv[0, 0])
    K = (cache.dg[0, 1:, 1:] - Dbeta - np.moveaxis(Dbeta, 0, 1)) / (2.0 * lapse)
    n_up = -lapse * cache.ginv[:, 0]
    T = cache.T
    T_nn = np.einsum("m...,n...,mn...->...", n_up, n_up, T)
    T_nj = np.einsum("m...,mj...->j...", n_up, T[:, 1:])
    u_sp = cache.u_up[1:]
    data = GeometricData(g=g3, K=K, p=P_phys, u=u_sp)
    return data, (T_nn, T_nj)
