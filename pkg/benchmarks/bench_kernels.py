"""Timing of the numba kernels against their numpy fallbacks, plus one full RHS.

    python3 benchmarks/bench_kernels.py [--sizes 16 32] [--repeat 5]

Reports the best of ``repeat`` runs.  Agreement between the two kernel versions
is checked on every size before timing.
"""

import argparse
import time

import numpy as np

from flrwlab import kernels
from flrwlab.identity_lab import DEFAULT_PARAMS, random_state
from flrwlab.reduced_system import full_rhs


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def spd_field(n, rng):
    a = rng.normal(size=(3, 3, n, n, n)) * 0.2
    return np.eye(3)[:, :, None, None, None] + 0.5 * (a + a.transpose(1, 0, 2, 3, 4))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not hasattr(kernels, "sym3_inverse_numba"):
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':22s} {'n':>4s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for n in args.sizes:
        G = spd_field(n, rng)
        inv_np, _ = kernels.sym3_inverse_numpy(G)
        inv_nb, _ = kernels.sym3_inverse_numba(G)
        assert np.allclose(inv_np, inv_nb, rtol=1e-12, atol=1e-14)
        assert np.allclose(kernels.sym3_min_eigenvalue_numpy(G), kernels.sym3_min_eigenvalue_numba(G), atol=1e-12)
        for name, f_np, f_nb in (
            ("sym3_inverse", kernels.sym3_inverse_numpy, kernels.sym3_inverse_numba),
            ("sym3_min_eigenvalue", kernels.sym3_min_eigenvalue_numpy, kernels.sym3_min_eigenvalue_numba),
        ):
            a = best_of(lambda: f_np(G), args.repeat)
            b = best_of(lambda: f_nb(G), args.repeat)
            print(f"{name:22s} {n:4d} {1e3 * a:10.3f} {1e3 * b:10.3f} {a / b:8.1f}")

    print()
    print(f"{'full_rhs':22s} {'n':>4s} {'ms':>10s}")
    for n in args.sizes:
        state, grid = random_state(0, n=n, amplitude=0.05)
        t = best_of(lambda: full_rhs(state, DEFAULT_PARAMS, grid), max(1, args.repeat // 2))
        print(f"{'':22s} {n:4d} {1e3 * t:10.1f}")


if __name__ == "__main__":
    main()
