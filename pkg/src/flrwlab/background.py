"""Exact FLRW background with a perfect fluid p = cs2 * rho and Lambda > 0.

The scale factor has the closed form

    a(t) = {sinh(s H t / 2) * sqrt(rho_bar / (3 H^2) + 1) + cosh(s H t / 2)}^(2/s)

with s = 3(1 + cs2) and H = sqrt(Lambda / 3).  Everything else (Omega, omega,
the rescaled background pressure) is derived from it analytically, so the
evolution never integrates the background numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BackgroundParams:
    Lambda: float
    cs2: float
    rho_bar: float
    eta_min_proxy: float | None = None
    q: float = field(init=False)

    def __post_init__(self):
        if not (self.Lambda > 0 and math.isfinite(self.Lambda)):
            raise ValueError(f"Lambda must be positive, got {self.Lambda}")
        if not (0.0 < self.cs2 < 1.0 / 3.0):
            raise ValueError(f"cs2 must lie in (0, 1/3), got {self.cs2}")
        if not (self.rho_bar > 0 and math.isfinite(self.rho_bar)):
            raise ValueError(f"rho_bar must be positive, got {self.rho_bar}")
        d = self.delta_param
        cap = min(d, 1.0 - d)
        eta = cap if self.eta_min_proxy is None else float(self.eta_min_proxy)
        if eta <= 0:
            raise ValueError("eta_min_proxy must be positive")
        object.__setattr__(self, "q", (2.0 / 3.0) * min(eta, d, 1.0 - d))

    @property
    def H(self) -> float:
        return math.sqrt(self.Lambda / 3.0)

    @property
    def p_bar(self) -> float:
        return self.cs2 * self.rho_bar

    @property
    def delta_param(self) -> float:
        return 3.0 * self.cs2

    @property
    def varsigma(self) -> float:
        return 3.0 * (1.0 + self.cs2)

    @property
    def amplitude_A(self) -> float:
        """Constant A in the upper bound a(t) <= A e^{Ht}."""
        s = math.sqrt(self.rho_bar / (3.0 * self.H**2) + 1.0)
        return (0.5 * (s + 1.0)) ** (2.0 / self.varsigma)


@dataclass(frozen=True)
class BackgroundState:
    t: float
    a: float
    Omega: float
    omega: float
    omega_dot: float
    p_tilde: float


def e_folding(params: BackgroundParams, t):
    """Omega(t) = ln a(t), evaluated without overflow for large t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("background is defined for t >= 0")
    x = 0.5 * params.varsigma * params.H * t
    s = math.sqrt(params.rho_bar / (3.0 * params.H**2) + 1.0)
    # sinh(x) s + cosh(x) = e^x [s (1 - e^{-2x}) + (1 + e^{-2x})] / 2
    em = np.exp(-2.0 * x)
    inner = 0.5 * (s * (1.0 - em) + (1.0 + em))
    out = (2.0 / params.varsigma) * (x + np.log(inner))
    return float(out) if out.ndim == 0 else out


def scale_factor(params: BackgroundParams, t):
    out = np.exp(e_folding(params, t))
    return float(out) if np.ndim(out) == 0 else out


def friedmann_rhs(params: BackgroundParams, a):
    """Right-hand side of da/dt = a sqrt(Lambda/3 + rho_bar / (3 a^s))."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("scale factor must be positive")
    out = a * np.sqrt(params.Lambda / 3.0 + params.rho_bar / (3.0 * a**params.varsigma))
    return float(out) if out.ndim == 0 else out


def background_at(params: BackgroundParams, t: float) -> BackgroundState:
    Omega = e_folding(params, t)
    vs = params.varsigma
    # omega^2 = H^2 + rho_bar e^{-s Omega} / 3; written this way it never overflows
    decay = math.exp(-vs * Omega)
    omega = math.sqrt(params.Lambda / 3.0 + params.rho_bar * decay / 3.0)
    p_tilde = decay * params.p_bar
    omega_dot = -(1.0 + params.cs2) / (2.0 * params.cs2) * p_tilde
    return BackgroundState(
        t=float(t),
        a=math.exp(Omega),
        Omega=Omega,
        omega=omega,
        omega_dot=omega_dot,
        p_tilde=p_tilde,
    )


def sample_background(params: BackgroundParams, t_max: float, samples: int) -> np.ndarray:
    """Table with columns t, a, Omega, omega, p_tilde."""
    if samples < 2:
        raise ValueError("need at least two samples")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    rows = []
    for t in np.linspace(0.0, t_max, samples):
        b = background_at(params, float(t))
        rows.append((b.t, b.a, b.Omega, b.omega, b.p_tilde))
    return np.array(rows)
