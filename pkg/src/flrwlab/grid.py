"""Periodic grid on T^3 = [-pi, pi)^3 with spectral or fourth-order
finite-difference differentiation, Sobolev and sup norms, 2/3-rule
dealiasing, and snapshot serialization.
"""

from __future__ import annotations

import itertools
import math
import struct
from functools import cached_property
from pathlib import Path

import numpy as np

BACKENDS = ("spectral", "fd4")


def multi_indices(N: int):
    """All multi-indices (a1, a2, a3) with a1 + a2 + a3 <= N, in a fixed order."""
    out = []
    for order in range(N + 1):
        for a in itertools.product(range(order + 1), repeat=3):
            if sum(a) == order:
                out.append(a)
    return out


class Grid:
    def __init__(self, n: int, backend: str = "spectral", dealias: bool = True):
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {n}")
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
        self.n = n
        self.backend = backend
        self.dealias = dealias
        self.spacing = 2.0 * math.pi / n
        self.shape = (n, n, n)
        self.cell_volume = self.spacing**3

    @cached_property
    def coords(self):
        x = -math.pi + self.spacing * np.arange(self.n)
        return np.meshgrid(x, x, x, indexing="ij")

    @cached_property
    def _rk(self):
        """Integer wavenumbers in the rfftn layout, Nyquist zeroed for odd derivatives."""
        n = self.n
        k = np.fft.fftfreq(n, 1.0 / n)
        kr = np.fft.rfftfreq(n, 1.0 / n)
        k_odd = k.copy()
        k_odd[n // 2] = 0.0
        kr_odd = kr.copy()
        kr_odd[-1] = 0.0
        return (
            k_odd[:, None, None],
            k_odd[None, :, None],
            kr_odd[None, None, :],
        )

    @cached_property
    def _dealias_mask(self):
        n = self.n
        k = np.abs(np.fft.fftfreq(n, 1.0 / n))
        kr = np.abs(np.fft.rfftfreq(n, 1.0 / n))
        cut = n / 3.0
        return (k[:, None, None] < cut) & (k[None, :, None] < cut) & (kr[None, None, :] < cut)

    @cached_property
    def _full_k(self):
        n = self.n
        k = np.fft.fftfreq(n, 1.0 / n)
        return np.meshgrid(k, k, k, indexing="ij")

    def zeros(self, *lead):
        return np.zeros(tuple(lead) + self.shape)

    def check_field(self, f: np.ndarray):
        if f.shape[-3:] != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")

    # ---- differentiation -------------------------------------------------

    def derivative(self, f: np.ndarray, axis: int) -> np.ndarray:
        """d/dx^axis for axis in 1..3, applied over the trailing three dimensions."""
        if axis not in (1, 2, 3):
            raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
        self.check_field(f)
        if self.backend == "fd4":
            return self._fd4(f, axis)
        fh = np.fft.rfftn(f, axes=(-3, -2, -1))
        return np.fft.irfftn(1j * self._rk[axis - 1] * fh, s=self.shape, axes=(-3, -2, -1))

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Stack of the three spatial derivatives; result has a leading axis of length 3."""
        self.check_field(f)
        if self.backend == "fd4":
            return np.stack([self._fd4(f, a) for a in (1, 2, 3)])
        fh = np.fft.rfftn(f, axes=(-3, -2, -1))
        return np.stack(
            [np.fft.irfftn(1j * k * fh, s=self.shape, axes=(-3, -2, -1)) for k in self._rk]
        )

    def derivatives(self, F: np.ndarray, second: bool = False):
        """First (and optionally second) spatial derivatives of a stack of fields.

        Returns ``d`` with ``d[c] = d_c F`` (shape (3,) + F.shape) and, if requested,
        ``dd`` with ``dd[c, e] = d_c d_e F`` (shape (3, 3) + F.shape).  Second
        derivatives are products of the first-derivative multipliers, i.e. exactly
        repeated first derivatives.
        """
        self.check_field(F)
        if self.backend == "fd4":
            d = np.stack([self._fd4(F, a) for a in (1, 2, 3)])
            if not second:
                return d, None
            dd = np.empty((3, 3) + F.shape)
            for c in range(3):
                for e in range(c, 3):
                    dd[c, e] = self._fd4(d[c], e + 1)
                    dd[e, c] = dd[c, e]
            return d, dd
        axes = (-3, -2, -1)
        Fh = np.fft.rfftn(F, axes=axes)
        ik = [1j * k for k in self._rk]
        d = np.stack([np.fft.irfftn(m * Fh, s=self.shape, axes=axes) for m in ik])
        if not second:
            return d, None
        dd = np.empty((3, 3) + F.shape)
        for c in range(3):
            for e in range(c, 3):
                dd[c, e] = np.fft.irfftn(ik[c] * ik[e] * Fh, s=self.shape, axes=axes)
                dd[e, c] = dd[c, e]
        return d, dd

    def hessian(self, f: np.ndarray) -> np.ndarray:
        """Second derivatives [a, b] as repeated first derivatives."""
        g = self.gradient(f)
        out = np.empty((3, 3) + f.shape)
        for a in range(3):
            ga = self.gradient(g[a])
            for b in range(3):
                out[a, b] = ga[b]
        return out

    def _fd4(self, f, axis):
        ax = f.ndim - 4 + axis
        h = self.spacing
        return (
            -np.roll(f, -2, axis=ax)
            + 8.0 * np.roll(f, -1, axis=ax)
            - 8.0 * np.roll(f, 1, axis=ax)
            + np.roll(f, 2, axis=ax)
        ) / (12.0 * h)

    def partial(self, f: np.ndarray, alpha) -> np.ndarray:
        """Mixed spatial derivative for a multi-index alpha = (a1, a2, a3)."""
        self.check_field(f)
        if sum(alpha) == 0:
            return f.copy()
        if self.backend == "fd4":
            out = f
            for axis, count in zip((1, 2, 3), alpha):
                for _ in range(count):
                    out = self._fd4(out, axis)
            return out
        fh = np.fft.rfftn(f, axes=(-3, -2, -1))
        mult = 1.0
        for k, count in zip(self._rk, alpha):
            mult = mult * (1j * k) ** count
        return np.fft.irfftn(mult * fh, s=self.shape, axes=(-3, -2, -1))

    def multi_derivatives(self, F: np.ndarray, N: int, with_gradient: bool = False):
        """Yield (alpha, d_alpha F, grad d_alpha F or None) for every |alpha| <= N.

        One forward transform serves every multi-index on the spectral backend.
        """
        self.check_field(F)
        if self.backend == "fd4":
            for alpha in multi_indices(N):
                dF = self.partial(F, alpha)
                yield alpha, dF, (np.stack([self._fd4(dF, a) for a in (1, 2, 3)]) if with_gradient else None)
            return
        axes = (-3, -2, -1)
        Fh = np.fft.rfftn(F, axes=axes)
        ik = [1j * k for k in self._rk]
        for alpha in multi_indices(N):
            mult = 1.0
            for m, count in zip(ik, alpha):
                mult = mult * m**count
            base = mult * Fh
            dF = np.fft.irfftn(base, s=self.shape, axes=axes)
            grad = None
            if with_gradient:
                grad = np.stack([np.fft.irfftn(m * base, s=self.shape, axes=axes) for m in ik])
            yield alpha, dF, grad

    def gradient_sobolev_norm(self, f: np.ndarray, N: int) -> float:
        """|| (d_1 f, d_2 f, d_3 f) ||_{H^N}, the components combined in l^2."""
        self.check_field(f)
        k1, k2, k3 = self._full_k
        fh = np.fft.fftn(f)
        power = np.abs(fh) ** 2 * (k1**2 + k2**2 + k3**2)
        total = np.sum(self._multiplier(N) * power) * self.cell_volume / f.size
        return math.sqrt(max(float(total), 0.0))

    def filter(self, f: np.ndarray) -> np.ndarray:
        """2/3-rule truncation if dealiasing is enabled, identity otherwise."""
        if not self.dealias:
            return f
        fh = np.fft.rfftn(f, axes=(-3, -2, -1))
        return np.fft.irfftn(fh * self._dealias_mask, s=self.shape, axes=(-3, -2, -1))

    # ---- norms -----------------------------------------------------------

    def integrate(self, f: np.ndarray) -> float:
        out = np.sum(f, axis=(-3, -2, -1)) * self.cell_volume
        return float(out) if np.ndim(out) == 0 else out

    def sobolev_multiplier(self, N: int) -> np.ndarray:
        k1, k2, k3 = self._full_k
        m = np.zeros(self.shape)
        for a in multi_indices(N):
            m += k1 ** (2 * a[0]) * k2 ** (2 * a[1]) * k3 ** (2 * a[2])
        return m

    def sobolev_norm(self, f: np.ndarray, N: int) -> float:
        """(sum_{|alpha|<=N} int |d_alpha f|^2)^(1/2) via spectral multipliers."""
        self.check_field(f)
        if N < 0:
            raise ValueError("N must be non-negative")
        fh = np.fft.fftn(f)
        power = np.abs(fh) ** 2
        total = np.sum(self._multiplier(N) * power) * self.cell_volume / f.size
        return math.sqrt(max(float(total), 0.0))

    def _multiplier(self, N):
        cache = self.__dict__.setdefault("_mult_cache", {})
        if N not in cache:
            cache[N] = self.sobolev_multiplier(N)
        return cache[N]

    def l2_norm(self, f: np.ndarray) -> float:
        return math.sqrt(float(np.sum(f * f)) * self.cell_volume)

    def l1_norm(self, f: np.ndarray) -> float:
        return float(np.sum(np.abs(f))) * self.cell_volume

    @staticmethod
    def sup_norm(f: np.ndarray) -> float:
        return float(np.max(np.abs(f)))

    # ---- random band-limited fields -----------------------------------

    def random_field(self, rng: np.random.Generator, kmax: int, amplitude: float = 1.0):
        """Zero-mean real trigonometric polynomial with |k_i| <= kmax and sup <= amplitude."""
        if kmax < 1:
            raise ValueError("kmax must be >= 1")
        if kmax > self.n // 4:
            raise ValueError(f"kmax={kmax} exceeds n/4={self.n // 4}")
        k1, k2, k3 = self._full_k
        mask = (np.abs(k1) <= kmax) & (np.abs(k2) <= kmax) & (np.abs(k3) <= kmax)
        mask[0, 0, 0] = False
        coeff = rng.standard_normal(self.shape) + 1j * rng.standard_normal(self.shape)
        f = np.real(np.fft.ifftn(coeff * mask))
        peak = np.max(np.abs(f))
        return f * (amplitude / peak) if peak > 0 else f


# ---- snapshot I/O --------------------------------------------------------

_MAGIC = b"FLRWSNAP"


def write_snapshot(path: Path | str, name: str, f: np.ndarray) -> None:
    """Flat binary: magic, n (uint32), name length (uint32), name (utf-8), float64 row-major payload."""
    f = np.asarray(f, dtype="<f8")
    n = f.shape[0]
    if f.shape != (n, n, n):
        raise ValueError("snapshots hold a single cubic scalar field")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"refusing to write non-finite values for {name!r}")
    raw = name.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", n, len(raw)))
        fh.write(raw)
        fh.write(np.ascontiguousarray(f).tobytes(order="C"))


def read_snapshot(path: Path | str) -> tuple[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        n, length = struct.unpack("<II", fh.read(8))
        name = fh.read(length).decode("utf-8")
        payload = fh.read()
    if len(payload) != 8 * n**3:
        raise ValueError(f"{path}: payload size does not match n={n}")
    f = np.frombuffer(payload, dtype="<f8").reshape(n, n, n).astype(float)
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{path}: snapshot contains NaN or Inf")
    return name, f


def write_snapshot_csv(path: Path | str, name: str, grid: Grid, f: np.ndarray) -> None:
    if not np.all(np.isfinite(f)):
        raise ValueError(f"refusing to write non-finite values for {name!r}")
    x1, x2, x3 = grid.coords
    table = np.column_stack([x1.ravel(), x2.ravel(), x3.ravel(), f.ravel()])
    np.savetxt(path, table, delimiter=",", header=f"x1,x2,x3,{name}", comments="")


def read_snapshot_csv(path: Path | str) -> tuple[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if len(header) != 4 or header[:3] != ["x1", "x2", "x3"]:
        raise ValueError(f"{path}: unexpected header {header}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = round(len(data) ** (1.0 / 3.0))
    if n**3 != len(data):
        raise ValueError(f"{path}: row count is not a cube")
    f = data[:, 3].reshape(n, n, n)
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{path}: snapshot contains NaN or Inf")
    return header[3], f
