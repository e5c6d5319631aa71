"""Acceptance criteria, one test per criterion at its stated tolerance.

Run on its own with ``python3 tests/test_acceptance.py``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

import oracles
from approxconvex.defects import (
    convexity_defect, quasi_additivity_constant, random_sparse_pairs, sampled_convexity_defect,
)
from approxconvex.distances import direct_convex_distance, distance_to_convex, grid_convexity_constraints
from approxconvex.envelope import (
    covering_polyhedron, envelope_norm, iterative_preimage, make_covering_system, quasi_norm,
    quasi_norm_lower_bound_value, sign_oracle, verify_partition_sum, verify_small_union,
)
from approxconvex.gallery import (
    FStarConfig, block_average, block_average_value, block_point, cholewa_kominek_omega,
    entropy_rows, f_star, f_star_rows, nested_point, neg_log_norm_rows, omega_rows, ribe_rows,
)
from approxconvex.grids import (
    SampledFunction, enumerate_convex_triples, make_cube_grid, make_positive_section_grid,
    make_simplex_grid, sample_function,
)
from approxconvex.homogenization import (
    StabilityBudget, affine_recovery_experiment, stability_bound_report,
)
from approxconvex.polyhedra import enumerate_vertices


def test_01_omega_divergence(criterion):
    criterion("01 omega(e_i) = 0 and omega(2^-n sum e_i) = n, n = 1..10, < 1 s")
    t0 = time.perf_counter()
    for n in range(1, 11):
        size = 1 << n
        assert cholewa_kominek_omega([Fraction(1, size)] * size) == n
        assert cholewa_kominek_omega([0] * (n - 1) + [1]) == 0
    assert time.perf_counter() - t0 < 1.0


def test_02_one_convexity(criterion):
    criterion("02 entropy, -log2||.|| (sup, l1) defect <= 1, omega defect <= 2 on 1e4 pairs")
    dom = make_simplex_grid(4, 3)
    ent = sample_function(dom, entropy_rows, vectorized=True)
    assert convexity_defect(ent, enumerate_convex_triples(dom, 3)).value <= 1 + 1e-9

    pos = make_positive_section_grid(3, 3).without_origin()
    triples = enumerate_convex_triples(pos, 3)
    for kind in ("sup", "l1"):
        sf = sample_function(pos, lambda X: neg_log_norm_rows(X, kind), vectorized=True)
        assert convexity_defect(sf, triples).value <= 1 + 1e-9

    X, Y = random_sparse_pairs(10_000, seed=2024, nonnegative=True, dyadic_bits=8)
    t = np.random.default_rng(2024).integers(0, 17, size=len(X)) / 16
    assert sampled_convexity_defect(omega_rows, X, Y, t).value <= 2 + 1e-9


def test_03_ribe_constant(criterion):
    criterion("03 Ribe quasi-additivity <= 2 on 1e5 pairs; exact dyadic homogeneity")
    X, Y = random_sparse_pairs(100_000, seed=3)
    assert quasi_additivity_constant(ribe_rows, (X, Y), seed=3).value <= 2 + 1e-9
    base = ribe_rows(X[:2000])
    for e in range(-5, 6):
        for sign in (1.0, -1.0):
            t = sign * 2.0 ** e
            assert np.array_equal(ribe_rows(t * X[:2000]), t * base)


def test_04_distance_identity(criterion):
    criterion("04 minorant and Caratheodory routes agree within 1e-6 on 50 functions")
    dom = make_simplex_grid(3, 3)
    cons = grid_convexity_constraints(dom)
    triples = enumerate_convex_triples(dom, 3)
    rng = np.random.default_rng(4)
    for _ in range(50):
        sf = SampledFunction(dom, rng.normal(size=len(dom)))
        d, g = distance_to_convex(sf)
        assert abs(direct_convex_distance(sf, cons).d - d) <= 1e-6
        assert convexity_defect(g, triples).value <= 1e-7


def test_05_entropy_distance_growth(criterion):
    criterion("05 entropy distance on simplex(2^m, m) = m/2, m = 1..3, < 2 min at m = 3")
    for m in (1, 2, 3):
        t0 = time.perf_counter()
        dom = make_simplex_grid(1 << m, m)
        d, _ = distance_to_convex(sample_function(dom, entropy_rows, vectorized=True))
        assert abs(d - m / 2) <= 1e-6
        assert time.perf_counter() - t0 < 120


def test_06_f_star_variants(criterion):
    criterion("06 F* nested p_i -> i-1, blocks q_i -> 0, block averages, defect <= 1")
    nested = FStarConfig("nested")
    for i in range(1, 9):
        assert f_star(nested_point(i, 8), nested) == i - 1
    blocks = FStarConfig("blocks")
    for m in (2, 4, 8, 16):
        assert all(f_star(block_point(blocks, m, i), blocks) == 0 for i in range(1, m + 1))
        avg = f_star(block_average(blocks, m), blocks)
        expect = -math.log2(1 / m + 2.0 ** -m * (m - 1) / m)
        assert avg == block_average_value(m)
        assert avg == pytest.approx(expect, rel=1e-15)
        assert avg >= math.log2(m) - 1
    dom = make_positive_section_grid(4, 2)
    triples = enumerate_convex_triples(dom, 2)
    for cfg in (nested, blocks):
        sf = sample_function(dom, lambda X: f_star_rows(X, cfg), vectorized=True)
        assert convexity_defect(sf, triples).value <= 1 + 1e-9


def test_07_small_unions(criterion):
    criterion("07 small unions never cover; sum of indicators = n exactly")
    for eps, n in [(1, 2), (1, 3), (Fraction(1, 2), 2), (Fraction(1, 2), 4)]:
        cs = make_covering_system(eps, n)
        rep = verify_small_union(cs)
        assert rep.holds and not rep.failures
        assert rep.checked == sum(math.comb(cs.m, j) for j in range(math.floor(eps * n) + 1))
        for J, w in rep.witnesses:
            assert not set(J) & set(w)
        part = verify_partition_sum(cs)
        assert part.holds and set(part.counts) == {n}


def test_08_quasi_norm_bounds(criterion):
    criterion("08 quasi-norm bounds, envelope sandwich, vertex brute force, < 5 min")
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    for n in (2, 3, 4):
        cs = make_covering_system(1, n)
        for p in (Fraction(1, 2), Fraction(2, 3)):
            assert quasi_norm(cs, cs.ones(), p).objective >= quasi_norm_lower_bound_value(1, n, p)
            for i in range(1, cs.m + 1):
                cert = quasi_norm(cs, cs.indicator_A(i), p)
                assert cert.objective == 1
                assert sum(cert.c) == 1
        assert abs(float(envelope_norm(cs, cs.ones())) - 2) <= 1e-7
        assert envelope_norm(cs, cs.ones(), exact=True) == 2
        for _ in range(100):
            f = [Fraction(int(v), 8) for v in rng.integers(-8, 9, cs.size)]
            sup = max(abs(v) for v in f)
            env = envelope_norm(cs, f, exact=True)
            assert sup <= env <= 2 * sup
        if cs.m <= 6:
            f_rand = [Fraction(int(v), 4) for v in rng.integers(0, 5, cs.size)]
            for f in (cs.ones(), cs.indicator_A(1), f_rand):
                A, b = covering_polyhedron(cs, f)
                got = [v.coords for v in enumerate_vertices(A, b)]
                assert got == oracles.covering_vertices(cs.incidence, f)
    assert time.perf_counter() - t0 < 300


def test_09_preimage_decay(criterion):
    criterion("09 sign oracle residual <= 2^-k for k <= 20; 1/2-power sum <= 3.414...")
    rng = np.random.default_rng(9)
    bound = 1 / (1 - 2 ** -0.5) + 1e-9
    targets = [[Fraction(int(v), 1024) for v in rng.integers(-1024, 1025, 4)] for _ in range(10)]
    targets.append([Fraction(1), Fraction(-1), Fraction(1), Fraction(-1)])
    for y in targets:
        res = iterative_preimage(sign_oracle, y, eps=0, k_max=20, p=Fraction(1, 2))
        assert all(r <= Fraction(1, 2 ** k) for k, r in enumerate(res.residuals))
        assert res.p_sum <= bound


def test_10_stability_pipeline(criterion):
    criterion("10 recovery d <= (6*200*R0/r0+2) eps and d <= 5 eta on 20 runs; 224; J <= 2A")
    dom = make_cube_grid(2, 3)
    rng = np.random.default_rng(10)
    for run in range(20):
        eta = 0.01 * (1 + run % 5)
        a = rng.uniform(-1, 1, 2)
        vals = dom.coords @ a + rng.uniform(-1, 1) + eta * rng.uniform(-1, 1, len(dom))
        rep = affine_recovery_experiment(SampledFunction(dom, vals), M_assumed=200)
        bound = (6 * 200 * rep.R0 / rep.r0 + 2) * rep.epsilon
        assert rep.measured_d <= bound
        assert rep.measured_d <= 5 * eta
    small = stability_bound_report(StabilityBudget(1.0, 1.0, M=37))
    assert small.affine_constant == 224
    big = stability_bound_report(StabilityBudget(1.0, 1.0, M=200))
    assert big.affine_constant == 1202
    assert big.jensen_constant_bound == 2 * big.affine_constant == 2404


def test_11_property_profile(criterion):
    criterion("11 property tests run 1000 seeded cases; suite wall time checked at session end")
    assert settings.default.max_examples == 1000
    assert settings.default.derandomize


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
