from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from approxconvex import kernels
from approxconvex.defects import convexity_defect
from approxconvex.distances import (
    best_affine_fit, best_jensen_fit, chebyshev_affine, convex_minorant, direct_convex_distance,
    distance_to_convex, grid_convexity_constraints, jensen_fit_values,
)
from approxconvex.gallery import entropy_rows
from approxconvex.grids import (
    SampledFunction, enumerate_convex_triples, enumerate_midpoint_pairs, make_cube_grid,
    make_grid, make_positive_section_grid, make_simplex_grid, sample_function,
)


def test_one_dimensional_bump():
    dom = make_positive_section_grid(1, 1)  # {0, 1/2, 1}
    sf = SampledFunction(dom, np.array([0.0, 1.0, 0.0]))
    assert np.allclose(convex_minorant(sf).values, 0.0)
    d, g = distance_to_convex(sf)
    assert d == 0.5
    assert np.allclose(g.values, 0.5)


def test_convex_function_is_its_own_minorant():
    dom = make_cube_grid(2, 2)
    sf = sample_function(dom, lambda X: (X * X).sum(axis=1) + X[:, 0], vectorized=True)
    for backend in kernels.BACKENDS:
        assert np.allclose(convex_minorant(sf, backend=backend).values, sf.values, atol=1e-12)
    assert distance_to_convex(sf)[0] <= 1e-12


def test_entropy_on_simplex_4_2():
    dom = make_simplex_grid(4, 2)
    sf = sample_function(dom, entropy_rows, vectorized=True)
    co = convex_minorant(sf)
    assert np.allclose(co.values, 0.0, atol=1e-9)
    d, _ = distance_to_convex(sf)
    assert d == pytest.approx(1.0, abs=1e-9)
    assert direct_convex_distance(sf).d == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("f", [lambda X: X[:, 0] ** 2, lambda X: np.abs(X[:, 0])])
def test_affine_fit_of_even_bumps(f):
    dom = make_cube_grid(1, 3)
    sf = sample_function(dom, f, vectorized=True)
    coeffs, d = best_affine_fit(sf)
    assert coeffs[0] == pytest.approx(0.0, abs=1e-12)
    assert coeffs[1] == pytest.approx(0.5)
    assert d == pytest.approx(0.5)
    assert d == pytest.approx(oracles.chebyshev_1d(dom.coords[:, 0], sf.values))


def test_affine_fit_random_1d_matches_oracle():
    dom = make_cube_grid(1, 3)
    rng = np.random.default_rng(11)
    for _ in range(10):
        vals = rng.normal(size=len(dom))
        _, d = best_affine_fit(SampledFunction(dom, vals))
        assert d == pytest.approx(oracles.chebyshev_1d(dom.coords[:, 0], vals), abs=1e-9)


def test_linear_fit_without_intercept():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    coeffs, d = chebyshev_affine(X, X @ [2.0, -1.0] + 0.0, intercept=False)
    assert len(coeffs) == 2
    assert np.allclose(coeffs, [2.0, -1.0])
    assert d <= 1e-12


def test_jensen_fit_of_perturbed_affine():
    dom = make_cube_grid(1, 2)
    eps = 0.125
    vals = 0.5 * dom.coords[:, 0] - 1.0
    vals[dom.find([1])] += eps
    g, d = best_jensen_fit(SampledFunction(dom, vals))
    assert d <= eps + 1e-12


def test_jensen_fit_matches_nullspace_oracle():
    # on a 1-D dyadic grid the midpoint-affine functions are exactly the affine ones
    dom = make_cube_grid(1, 3)
    pairs = oracles.brute_midpoints([tuple(int(v) for v in r) for r in dom.numerators])
    rows = []
    for x, y, m in pairs:
        if x != y:
            r = np.zeros(len(dom))
            r[m] += 1
            r[x] -= 0.5
            r[y] -= 0.5
            rows.append(r)
    assert oracles.nullspace(np.array(rows)).shape[1] == 2
    rng = np.random.default_rng(12)
    for _ in range(5):
        vals = rng.normal(size=len(dom))
        _, d = best_jensen_fit(SampledFunction(dom, vals))
        assert d == pytest.approx(oracles.chebyshev_1d(dom.coords[:, 0], vals), abs=1e-9)


def test_jensen_fit_values_raw_rows():
    g, d = jensen_fit_values([0.0, 1.0, 0.0], [(0, 2, 1)])
    assert d == pytest.approx(0.5)
    assert g[1] - 0.5 * (g[0] + g[2]) == pytest.approx(0.0, abs=1e-12)


# -- Carathéodory constraints and the direct route ------------------------------------------------


def test_constraints_match_subset_scan():
    dom = make_simplex_grid(3, 1)
    cons = grid_convexity_constraints(dom)
    pts = [tuple(int(v) for v in r) for r in dom.numerators]
    expect = oracles.brute_caratheodory(pts, 3)
    got = [(x, tuple(s for s, _ in sup)) for x, sup in cons]
    assert got == [(x, S) for x, S, _ in expect]
    for r, (_, _, w) in enumerate(expect):
        assert cons.exact_weights(r) == w


def test_constraints_one_dimensional_count():
    dom = make_cube_grid(1, 2)
    cons = grid_convexity_constraints(dom)
    n = len(dom)
    assert len(cons) == sum(i * (n - 1 - i) for i in range(n))
    assert np.allclose(cons.weights.sum(axis=1), 1.0)


def test_two_routes_agree_on_random_functions():
    dom = make_cube_grid(2, 1)
    cons = grid_convexity_constraints(dom)
    rng = np.random.default_rng(13)
    for _ in range(20):
        sf = SampledFunction(dom, rng.normal(size=len(dom)))
        d_min, g = distance_to_convex(sf)
        assert direct_convex_distance(sf, cons).d == pytest.approx(d_min, abs=1e-7)
        assert cons.slack(g.values).min() >= -1e-7


def test_two_routes_agree_across_backends():
    dom = make_simplex_grid(3, 2)
    sf = SampledFunction(dom, np.random.default_rng(14).normal(size=len(dom)))
    vals = [direct_convex_distance(sf, backend=b).d for b in kernels.BACKENDS]
    vals += [distance_to_convex(sf, backend=b)[0] for b in kernels.BACKENDS]
    assert max(vals) - min(vals) <= 1e-9


# -- properties ----------------------------------------------------------------------------------

LINE = make_cube_grid(1, 2)
LINE_X = LINE.coords[:, 0]
SQUARE = make_grid("cube", 2, 0)
SQUARE_TRIPLES = enumerate_convex_triples(SQUARE, 1)
ints = st.integers(-8, 8)


def line_values():
    return st.lists(ints, min_size=len(LINE), max_size=len(LINE)).map(lambda v: np.array(v, float) / 4)


def square_values():
    return st.lists(ints, min_size=len(SQUARE), max_size=len(SQUARE)).map(lambda v: np.array(v, float))


@given(line_values())
def test_minorant_matches_lower_hull(vals):
    co = convex_minorant(SampledFunction(LINE, vals)).values
    assert np.allclose(co, oracles.lower_hull_1d(LINE_X, vals), atol=1e-9)


@given(square_values())
def test_minorant_below_and_idempotent(vals):
    sf = SampledFunction(SQUARE, vals)
    co = convex_minorant(sf)
    assert np.all(co.values <= vals + 1e-12)
    assert np.allclose(convex_minorant(co).values, co.values, atol=1e-9)
    assert convexity_defect(co, SQUARE_TRIPLES).value <= 1e-9


@given(square_values(), st.lists(st.integers(0, 4), min_size=len(SQUARE), max_size=len(SQUARE)))
def test_minorant_monotone(vals, bump):
    lo = convex_minorant(SampledFunction(SQUARE, vals)).values
    hi = convex_minorant(SampledFunction(SQUARE, vals + np.array(bump, float))).values
    assert np.all(lo <= hi + 1e-9)


@given(square_values())
def test_convex_distance_certificate(vals):
    d, g = distance_to_convex(SampledFunction(SQUARE, vals))
    assert np.max(np.abs(vals - g.values)) == pytest.approx(d, abs=1e-9)
    assert convexity_defect(g, SQUARE_TRIPLES).value <= 1e-7


@given(line_values(), st.integers(-4, 4), st.integers(-4, 4))
def test_affine_fit_shift_invariant(vals, a, b):
    _, d0 = best_affine_fit(SampledFunction(LINE, vals))
    _, d1 = best_affine_fit(SampledFunction(LINE, vals + a * LINE_X + b))
    assert d1 == pytest.approx(d0, abs=1e-9)
    assert d0 == pytest.approx(oracles.chebyshev_1d(LINE_X, vals), abs=1e-9)


@given(line_values())
def test_jensen_fit_bounded_by_affine_fit(vals):
    sf = SampledFunction(LINE, vals)
    g, d = best_jensen_fit(sf)
    assert d <= best_affine_fit(sf)[1] + 1e-9
    for x, y, m in enumerate_midpoint_pairs(LINE):
        assert abs(g.values[m] - 0.5 * (g.values[x] + g.values[y])) <= 1e-9
