import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from approxconvex import kernels
from approxconvex.grids import enumerate_convex_triples, make_grid

TOL = 1e-9


def slack_tableau(A, b, c):
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = c
    return T, np.arange(n, n + m, dtype=np.int64)


def test_python_backend_always_present():
    assert "python" in kernels.BACKENDS
    assert kernels.BACKEND in kernels.BACKENDS
    assert kernels.get_backend("python") is kernels.BACKENDS["python"]


def test_pure_python_switch():
    env = dict(os.environ, APPROXCONVEX_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import approxconvex.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_simplex_kernel_solves_small_lp():
    # min -x - y s.t. x + 2y <= 4, 3x + y <= 6
    T, basis = slack_tableau(np.array([[1.0, 2.0], [3.0, 1.0]]), np.array([4.0, 6.0]),
                             np.array([-1.0, -1.0]))
    for name, mod in kernels.BACKENDS.items():
        Tc, bc = T.copy(), basis.copy()
        status, it = mod.simplex_iterate(Tc, bc, 100, 50, TOL, 0)
        assert status == kernels.OPTIMAL
        assert -Tc[-1, -1] == pytest.approx(-2.8)


def test_simplex_kernel_unbounded():
    T, basis = slack_tableau(np.array([[-1.0]]), np.array([1.0]), np.array([-1.0]))
    for mod in kernels.BACKENDS.values():
        status, _ = mod.simplex_iterate(T.copy(), basis.copy(), 100, 50, TOL, 0)
        assert status == kernels.UNBOUNDED


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(1, 6), st.integers(0, 4))
def test_backends_pivot_identically(seed, m, n, bland_after):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 5, size=(m, n)).astype(float)
    b = rng.integers(0, 6, size=m).astype(float)
    c = rng.integers(-4, 4, size=n).astype(float)
    A[0] = 1.0  # keeps every instance bounded
    T, basis = slack_tableau(A, b, c)
    results = []
    for mod in kernels.BACKENDS.values():
        Tc, bc = T.copy(), basis.copy()
        status, it = mod.simplex_iterate(Tc, bc, 200, bland_after, TOL, 0)
        results.append((status, it, bc.tolist(), Tc))
    ref = results[0]
    for other in results[1:]:
        assert other[:3] == ref[:3]
        assert np.array_equal(other[3], ref[3])


@pytest.mark.parametrize("spec,j", [(("simplex", 4, 2), 2), (("cube", 2, 2), 3),
                                    (("ball_euclid", 3, 1), 1)])
def test_backends_enumerate_identical_triples(spec, j):
    dom = make_grid(*spec)
    out = [enumerate_convex_triples(dom, j, backend=b) for b in kernels.BACKENDS]
    for ts in out[1:]:
        for a, b in ((ts.x, out[0].x), (ts.y, out[0].y), (ts.a, out[0].a), (ts.combo, out[0].combo)):
            assert np.array_equal(a, b)
