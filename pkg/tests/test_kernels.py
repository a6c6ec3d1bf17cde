import numpy as np
import pytest

from flrwlab import kernels


def _sym_field(rng, shape=(5, 6, 7), scale=1.0):
    A = rng.standard_normal((3, 3) + shape) * scale
    G = A + A.transpose(1, 0, 2, 3, 4)
    for j in range(3):
        G[j, j] += 6.0
    return G


def test_numpy_inverse(rng):
    G = _sym_field(rng)
    inv, det = kernels.sym3_inverse_numpy(G)
    m = np.moveaxis(G, (0, 1), (-2, -1))
    np.testing.assert_allclose(np.moveaxis(inv, (0, 1), (-2, -1)), np.linalg.inv(m), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(det, np.linalg.det(m), rtol=1e-12)


def test_numpy_min_eigenvalue(rng):
    G = _sym_field(rng)
    ref = np.linalg.eigvalsh(np.moveaxis(G, (0, 1), (-2, -1)))[..., 0]
    np.testing.assert_allclose(kernels.sym3_min_eigenvalue_numpy(G), ref, rtol=1e-13)


needs_numba = pytest.mark.skipif(kernels.numba is None, reason="numba not installed")


@needs_numba
def test_numba_matches_numpy_inverse(rng):
    G = _sym_field(rng)
    a, da = kernels.sym3_inverse_numpy(G)
    b, db = kernels.sym3_inverse_numba(G)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(da, db, rtol=1e-13)


@needs_numba
def test_numba_min_eigenvalue(rng):
    G = _sym_field(rng)
    ref = np.linalg.eigvalsh(np.moveaxis(G, (0, 1), (-2, -1)))[..., 0]
    np.testing.assert_allclose(kernels.sym3_min_eigenvalue_numba(G), ref, rtol=1e-10)


@needs_numba
def test_numba_min_eigenvalue_degenerate_cases():
    G = np.zeros((3, 3, 1, 1, 3))
    for j in range(3):
        G[j, j] = 1.0
    G[0, 0, 0, 0, 1] = 0.25  # diagonal, distinct entries
    G[:, :, 0, 0, 2] = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 3.0]])
    out = kernels.sym3_min_eigenvalue_numba(G)
    np.testing.assert_allclose(out.ravel(), [1.0, 0.25, 1.0], rtol=1e-12)


def test_selected_backend_is_consistent(rng):
    G = _sym_field(rng, shape=(4, 4, 4))
    inv, _ = kernels.sym3_inverse(G)
    np.testing.assert_allclose(inv, kernels.sym3_inverse_numpy(G)[0], rtol=1e-12, atol=1e-15)
    expected = kernels.numba is not None
    assert kernels.USE_NUMBA in (expected, False)


def test_env_flag_selects_numpy():
    import os
    import subprocess
    import sys

    code = "import flrwlab.kernels as k; print(k.USE_NUMBA, k.sym3_inverse is k.sym3_inverse_numpy)"
    env = dict(os.environ, FLRWLAB_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
