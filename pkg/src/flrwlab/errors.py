"""Numerical breakdown signals, numbered after the four ways a classical
solution of the modified system can fail to continue:

    1  g00 reaches zero (the time direction stops being timelike)
    2  the spatial metric loses positive definiteness
    3  the pressure reaches zero
    4  a C_b-type norm of the solution blows up (also used for non-finite values)
"""

from __future__ import annotations

import numpy as np

CASE_DESCRIPTIONS = {
    1: "g00 approached zero",
    2: "smallest eigenvalue of the spatial metric approached zero",
    3: "pressure approached zero",
    4: "solution norm blew up",
}


class Breakdown(RuntimeError):
    def __init__(self, case: int, detail: str, location=None, t: float | None = None):
        self.case = case
        self.detail = detail
        self.location = None if location is None else tuple(int(i) for i in location)
        self.t = t
        where = "" if self.location is None else f" at grid point {self.location}"
        when = "" if t is None else f" (t={t:.6g})"
        super().__init__(f"breakdown case {case}: {detail}{where}{when}")

    def at_time(self, t: float) -> "Breakdown":
        return Breakdown(self.case, self.detail, self.location, t)


def first_bad(mask: np.ndarray):
    """Grid index of the first True entry of a boolean mask over the trailing 3 axes."""
    flat = np.argwhere(mask)
    return None if flat.size == 0 else flat[0][-3:]
