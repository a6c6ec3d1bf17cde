"""Hot pointwise kernels with a numba implementation and a pure-numpy fallback.

Set ``FLRWLAB_NUMBA=0`` in the environment to force the numpy versions (the
choice is made once, at import).  Both implementations are exercised by the
test suite and compared in ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("FLRWLAB_NUMBA", "1") != "0"


# ---- numpy implementations ------------------------------------------------


def sym3_inverse_numpy(G):
    a, b, c = G[0, 0], 0.5 * (G[0, 1] + G[1, 0]), 0.5 * (G[0, 2] + G[2, 0])
    d, e, f = G[1, 1], 0.5 * (G[1, 2] + G[2, 1]), G[2, 2]
    A = d * f - e * e
    B = c * e - b * f
    C = b * e - c * d
    D = a * f - c * c
    E = b * c - a * e
    F = a * d - b * b
    det = a * A + b * B + c * C
    inv = np.empty_like(G)
    inv[0, 0], inv[0, 1], inv[0, 2] = A / det, B / det, C / det
    inv[1, 0], inv[1, 1], inv[1, 2] = B / det, D / det, E / det
    inv[2, 0], inv[2, 1], inv[2, 2] = C / det, E / det, F / det
    return inv, det


def sym3_min_eigenvalue_numpy(G):
    m = np.moveaxis(G, (0, 1), (-2, -1))
    return np.linalg.eigvalsh(m)[..., 0]


# ---- numba implementations ------------------------------------------------

if numba is not None:

    @numba.njit(cache=True, fastmath=False)
    def _sym3_inverse_flat(G, inv, det):
        for p in range(G.shape[2]):
            a = G[0, 0, p]
            b = 0.5 * (G[0, 1, p] + G[1, 0, p])
            c = 0.5 * (G[0, 2, p] + G[2, 0, p])
            d = G[1, 1, p]
            e = 0.5 * (G[1, 2, p] + G[2, 1, p])
            f = G[2, 2, p]
            A = d * f - e * e
            B = c * e - b * f
            C = b * e - c * d
            D = a * f - c * c
            E = b * c - a * e
            F = a * d - b * b
            dt = a * A + b * B + c * C
            det[p] = dt
            inv[0, 0, p] = A / dt
            inv[0, 1, p] = B / dt
            inv[0, 2, p] = C / dt
            inv[1, 0, p] = B / dt
            inv[1, 1, p] = D / dt
            inv[1, 2, p] = E / dt
            inv[2, 0, p] = C / dt
            inv[2, 1, p] = E / dt
            inv[2, 2, p] = F / dt

    @numba.njit(cache=True, fastmath=False)
    def _sym3_min_eig_flat(G, out):
        # closed-form eigenvalues of a real symmetric 3x3 matrix
        for p in range(G.shape[2]):
            a = G[0, 0, p]
            d = G[1, 1, p]
            f = G[2, 2, p]
            b = 0.5 * (G[0, 1, p] + G[1, 0, p])
            c = 0.5 * (G[0, 2, p] + G[2, 0, p])
            e = 0.5 * (G[1, 2, p] + G[2, 1, p])
            p1 = b * b + c * c + e * e
            q = (a + d + f) / 3.0
            if p1 == 0.0:
                out[p] = min(a, min(d, f))
                continue
            p2 = (a - q) ** 2 + (d - q) ** 2 + (f - q) ** 2 + 2.0 * p1
            s = np.sqrt(p2 / 6.0)
            b11 = (a - q) / s
            b22 = (d - q) / s
            b33 = (f - q) / s
            b12 = b / s
            b13 = c / s
            b23 = e / s
            r = 0.5 * (
                b11 * (b22 * b33 - b23 * b23)
                - b12 * (b12 * b33 - b23 * b13)
                + b13 * (b12 * b23 - b22 * b13)
            )
            if r <= -1.0:
                phi = np.pi / 3.0
            elif r >= 1.0:
                phi = 0.0
            else:
                phi = np.arccos(r) / 3.0
            out[p] = q + 2.0 * s * np.cos(phi + 2.0 * np.pi / 3.0)

    def sym3_inverse_numba(G):
        shape = G.shape[2:]
        flat = np.ascontiguousarray(G.reshape(3, 3, -1))
        inv = np.empty_like(flat)
        det = np.empty(flat.shape[2])
        _sym3_inverse_flat(flat, inv, det)
        return inv.reshape((3, 3) + shape), det.reshape(shape)

    def sym3_min_eigenvalue_numba(G):
        shape = G.shape[2:]
        flat = np.ascontiguousarray(G.reshape(3, 3, -1))
        out = np.empty(flat.shape[2])
        _sym3_min_eig_flat(flat, out)
        return out.reshape(shape)


if USE_NUMBA:
    sym3_inverse = sym3_inverse_numba
    sym3_min_eigenvalue = sym3_min_eigenvalue_numba
else:
    sym3_inverse = sym3_inverse_numpy
    sym3_min_eigenvalue = sym3_min_eigenvalue_numpy
