"""FieldState: the evolved grid functions packed into one array.

Layout of ``data`` (leading axis, 24 components):

    0        g00
    1..3     g0j
    4..9     h_jk  (11, 12, 13, 22, 23, 33)
    10       k00 = d_t g00
    11..13   k0j = d_t g0j
    14..19   k_jk = d_t h_jk
    20       P   (rescaled pressure e^{3(1+cs2) Omega} p)
    21..23   u^j
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NCOMP = 24
SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM_INDEX = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])

I_G00, I_G0, I_H, I_K00, I_K0, I_KH, I_P, I_U = 0, 1, 4, 10, 11, 14, 20, 21

FIELD_NAMES = (
    ["g00", "g01", "g02", "g03"]
    + [f"h{a + 1}{b + 1}" for a, b in SYM_PAIRS]
    + ["k00", "k01", "k02", "k03"]
    + [f"kh{a + 1}{b + 1}" for a, b in SYM_PAIRS]
    + ["P", "u1", "u2", "u3"]
)


def sym_full(packed: np.ndarray) -> np.ndarray:
    """(6, ...) packed symmetric components -> (3, 3, ...) full tensor."""
    return packed[SYM_INDEX]


def sym_pack(full: np.ndarray) -> np.ndarray:
    """(3, 3, ...) symmetric tensor -> (6, ...) packed, symmetrizing on the way."""
    return np.stack([0.5 * (full[a, b] + full[b, a]) for a, b in SYM_PAIRS])


@dataclass
class FieldState:
    t: float
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape[0] != NCOMP or self.data.ndim != 4:
            raise ValueError(f"state data must have shape (24, n, n, n), got {self.data.shape}")

    @classmethod
    def from_components(cls, t, g00, g0, h, k00, k0, kh, P, u):
        n = g00.shape[-1]
        data = np.empty((NCOMP, n, n, n))
        data[I_G00] = g00
        data[I_G0:I_G0 + 3] = g0
        data[I_H:I_H + 6] = sym_pack(h) if h.shape[0] == 3 and h.ndim == 5 else h
        data[I_K00] = k00
        data[I_K0:I_K0 + 3] = k0
        data[I_KH:I_KH + 6] = sym_pack(kh) if kh.shape[0] == 3 and kh.ndim == 5 else kh
        data[I_P] = P
        data[I_U:I_U + 3] = u
        return cls(float(t), data)

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.data.copy())

    @property
    def n(self) -> int:
        return self.data.shape[-1]

    @property
    def g00(self):
        return self.data[I_G00]

    @property
    def g0(self):
        return self.data[I_G0:I_G0 + 3]

    @property
    def h(self):
        return sym_full(self.data[I_H:I_H + 6])

    @property
    def k00(self):
        return self.data[I_K00]

    @property
    def k0(self):
        return self.data[I_K0:I_K0 + 3]

    @property
    def kh(self):
        return sym_full(self.data[I_KH:I_KH + 6])

    @property
    def P(self):
        return self.data[I_P]

    @property
    def u(self):
        return self.data[I_U:I_U + 3]

    def fluid_array(self, p_bar: float) -> np.ndarray:
        """W = (P - p_bar, u^1, u^2, u^3)."""
        return np.concatenate([(self.P - p_bar)[None], self.u])
