"""einsum with the pairwise contraction plan cached per (subscripts, operand shapes).

np.einsum re-validates a path on every call even when one is supplied, which
costs as much as the contraction itself for the small index ranges and 16^3
grids used here.  Every operand is expected to carry the grid axes as a
trailing ``...``; other subscripts fall back to np.einsum.
"""

from __future__ import annotations

import numpy as np

_PLANS: dict = {}


def _plan(subscripts: str, operands):
    inputs, output = subscripts.split("->")
    terms = inputs.split(",")
    if len(terms) <= 2 or not all(t.endswith("...") for t in terms) or not output.endswith("..."):
        return None
    terms = [t[:-3] for t in terms]
    out = output[:-3]
    path = np.einsum_path(subscripts, *operands, optimize="greedy")[0][1:]
    steps = []
    for i, j in path:
        i, j = sorted((i, j))
        a, b = terms[i], terms[j]
        rest = [t for k, t in enumerate(terms) if k not in (i, j)]
        needed = "".join(rest) + out
        new = "".join(c for c in dict.fromkeys(a + b) if c in needed)
        steps.append((i, j, f"{a}...,{b}...->{new}..."))
        terms = rest + [new]
    final = None if terms[0] == out else f"{terms[0]}...->{out}..."
    return steps, final


def einsum(subscripts: str, *operands):
    if len(operands) <= 2:
        return np.einsum(subscripts, *operands)
    key = (subscripts,) + tuple(np.shape(op) for op in operands)
    plan = _PLANS.get(key, False)
    if plan is False:
        plan = _PLANS[key] = _plan(subscripts, operands)
    if plan is None:
        return np.einsum(subscripts, *operands, optimize=True)
    steps, final = plan
    ops = list(operands)
    for i, j, sub in steps:
        b = ops.pop(j)
        a = ops.pop(i)
        ops.append(np.einsum(sub, a, b))
    res = ops[0]
    return np.einsum(final, res) if final else res
