import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from approxconvex.envelope import (
    CoveringSystem, GAP_COLUMNS, dual_norm, envelope_gap_report, envelope_norm,
    iterative_preimage, make_covering_system, parse_p, pthetakappa_check, quasi_norm,
    quasi_norm_lower_bound, quasi_norm_lower_bound_value, sign_generators, sign_oracle,
    verify_partition_sum, verify_small_union,
)
from approxconvex.errors import OracleError, ParameterError, SizeLimitError

HALF = Fraction(1, 2)


@pytest.mark.parametrize("eps,n,m,omega,a_size", [
    (1, 2, 4, 6, 3), (1, 3, 6, 20, 10), (HALF, 2, 3, 3, 2),
])
def test_covering_counts(eps, n, m, omega, a_size):
    cs = make_covering_system(eps, n)
    assert (cs.m, cs.size) == (m, omega) == (m, math.comb(m, n))
    assert all(len(cs.A(i)) == a_size == math.comb(m - 1, n - 1) for i in range(1, m + 1))


def test_covering_errors(monkeypatch):
    with pytest.raises(ParameterError):
        make_covering_system(HALF, 3)
    with pytest.raises(ParameterError):
        make_covering_system(0, 2)
    monkeypatch.setenv("APPROXCONVEX_MAX_OMEGA", "10")
    with pytest.raises(SizeLimitError):
        make_covering_system(1, 3)


def test_covering_json():
    cs = make_covering_system(HALF, 4)
    data = json.loads(json.dumps(cs.to_json()))
    assert data == {"eps": "1/2", "n": 4}
    assert CoveringSystem.from_json(data).omega == cs.omega


def test_small_union_witness():
    cs = make_covering_system(1, 2)
    rep = verify_small_union(cs)
    assert rep.holds
    assert dict(rep.witnesses)[(1, 2)] == (3, 4)
    assert dict(rep.witnesses)[()] == cs.omega[0]


def test_small_union_exhaustive_count():
    rep = verify_small_union(make_covering_system(1, 3))
    assert rep.holds
    assert rep.checked == 1 + 6 + 15 + 20 == 42


@pytest.mark.parametrize("eps,n", [(1, 2), (1, 3), (HALF, 2)])
def test_partition_sum(eps, n):
    rep = verify_partition_sum(make_covering_system(eps, n))
    assert rep.holds
    assert set(rep.counts) == {n}


# -- quasi-norm ------------------------------------------------------------------------------


@pytest.mark.parametrize("p", [HALF, Fraction(2, 3), 1])
def test_indicator_of_A_i_has_norm_one(p):
    cs = make_covering_system(1, 2)
    for i in range(1, cs.m + 1):
        cert = quasi_norm(cs, cs.indicator_A(i), p)
        assert cert.objective == 1.0
        assert cert.check(cs, cs.indicator_A(i))


def test_zero_has_norm_zero():
    cs = make_covering_system(1, 2)
    assert quasi_norm(cs, [0] * cs.size).objective == 0.0


def test_ones_meets_lower_bound():
    cs = make_covering_system(1, 2)
    cert = quasi_norm(cs, cs.ones(), HALF)
    assert cert.objective >= 1.0
    assert cert.objective == pytest.approx(oracles.brute_quasi_norm(cs.incidence, cs.ones(), HALF))
    assert cert.active


def test_p_out_of_range():
    cs = make_covering_system(1, 2)
    with pytest.raises(ParameterError):
        quasi_norm(cs, cs.ones(), 0)
    with pytest.raises(ParameterError):
        parse_p("3/2")


@pytest.mark.parametrize("eps,n,p,value", [(1, 2, HALF, 1.0), (1, 4, HALF, 2.0), (1, 2, 1, 0.5)])
def test_lower_bound_closed_form(eps, n, p, value):
    assert quasi_norm_lower_bound_value(eps, n, p) == value


def test_lower_bound_counting_argument():
    rep = quasi_norm_lower_bound(make_covering_system(1, 3), HALF)
    assert rep.heavy_exceeds
    assert rep.min_heavy > 3
    assert rep.value == pytest.approx(1.5)


def test_lower_bound_ratio_vs_brute_force():
    for eps, n in [(1, 2), (HALF, 2), (HALF, 4), (2, 2)]:
        cs = make_covering_system(eps, n)
        for p in (HALF, Fraction(2, 3)):
            brute = oracles.brute_quasi_norm(cs.incidence, cs.ones(), p)
            assert quasi_norm(cs, cs.ones(), p).objective == pytest.approx(brute, rel=1e-12)
            assert brute >= quasi_norm_lower_bound_value(eps, n, p) * (1 - 1e-12)


# -- dual and envelope norms --------------------------------------------------------------------


def test_dual_norm_examples():
    cs = make_covering_system(1, 2)
    single = [0] * cs.size
    single[2] = 1
    assert dual_norm(cs, single) == 1
    assert dual_norm(cs, cs.ones()) == 3
    assert dual_norm(cs, [0] * cs.size) == 0
    assert dual_norm(cs, [0.5] * cs.size) == 1.5


def test_dual_norm_against_dense_ball_scan():
    # sup of <g, h> over h in the p-ball: h = sum c_i 1_{A_i} with sum c_i^p <= 1
    cs = make_covering_system(1, 2)
    inc = cs.incidence.astype(float)
    grid = np.linspace(0, 1, 11)
    rng = np.random.default_rng(21)
    cs_list = [np.array(c) for c in itertools.product(grid, repeat=cs.m) if sum(np.sqrt(c)) <= 1 + 1e-12]
    C = np.array(cs_list)
    for _ in range(10):
        g = rng.normal(size=cs.size)
        scan = float((C @ inc.T @ np.abs(g)).max())
        assert scan == pytest.approx(dual_norm(cs, g), rel=1e-12)


def test_envelope_examples():
    cs = make_covering_system(1, 2)
    assert envelope_norm(cs, cs.indicator_A(1)) == pytest.approx(1.0)
    assert envelope_norm(cs, cs.ones(), exact=True) == 2
    assert envelope_norm(cs, [0] * cs.size) == 0


def test_gap_report_rows():
    rows = envelope_gap_report(1, [2, 3], HALF)
    assert [r.n for r in rows] == [2, 3]
    assert all(r.holds for r in rows)
    assert rows[0].ratio_bound == 0.5
    assert rows[1].ratio_bound == 0.75
    assert all(r.envelope_norm == pytest.approx(2.0, abs=1e-12) for r in rows)
    assert len(rows[0].as_tuple()) == len(GAP_COLUMNS)


# -- properties on small systems ---------------------------------------------------------------

SYSTEMS = [make_covering_system(1, 2), make_covering_system(HALF, 2)]


@st.composite
def rational_f(draw, cs=None):
    cs = cs or draw(st.sampled_from(SYSTEMS))
    vals = [Fraction(draw(st.integers(-4, 4)), 2) for _ in range(cs.size)]
    return cs, vals


@given(rational_f(), st.sampled_from([HALF, Fraction(2, 3)]))
def test_sup_norm_below_quasi_norm(case, p):
    cs, f = case
    q = quasi_norm(cs, f, p).objective
    sup = max(abs(float(v)) for v in f)
    assert sup <= q + 1e-12


@given(rational_f(), st.integers(-3, 3), st.sampled_from([HALF, Fraction(2, 3)]))
def test_quasi_norm_homogeneous(case, lam, p):
    cs, f = case
    base = quasi_norm(cs, f, p).objective
    scaled = quasi_norm(cs, [lam * v for v in f], p).objective
    assert scaled == pytest.approx(abs(lam) * base, rel=1e-12, abs=1e-12)


@given(rational_f(SYSTEMS[0]), st.data())
def test_quasi_norm_monotone(case, data):
    cs, f = case
    bump = [Fraction(data.draw(st.integers(0, 2)), 2) for _ in f]
    bigger = [(abs(v) + b) for v, b in zip(f, bump)]
    assert quasi_norm(cs, f).objective <= quasi_norm(cs, bigger).objective + 1e-12


@given(rational_f(SYSTEMS[0]), rational_f(SYSTEMS[0]), st.sampled_from([HALF, Fraction(2, 3)]))
def test_p_triangle(a, b, p):
    cs, f = a
    _, g = b
    pf = float(p)
    lhs = quasi_norm(cs, [x + y for x, y in zip(f, g)], p).objective ** pf
    rhs = quasi_norm(cs, f, p).objective ** pf + quasi_norm(cs, g, p).objective ** pf
    assert lhs <= rhs + 1e-9


@given(rational_f())
def test_envelope_sandwich_and_p1_duality(case):
    cs, f = case
    env = envelope_norm(cs, f, exact=True)
    sup = max(abs(v) for v in f)
    assert sup <= env <= (1 + cs.eps) * sup
    # LP duality: the envelope norm is the p = 1 quasi-norm
    assert float(env) == pytest.approx(quasi_norm(cs, f, 1).objective, rel=1e-12, abs=1e-15)
    assert float(env) <= quasi_norm(cs, f, HALF).objective + 1e-12
    assert float(env) == pytest.approx(envelope_norm(cs, f), rel=1e-9, abs=1e-12)


@given(rational_f(SYSTEMS[0]), rational_f(SYSTEMS[0]))
def test_envelope_triangle(a, b):
    cs, f = a
    _, g = b
    s = envelope_norm(cs, [x + y for x, y in zip(f, g)], exact=True)
    assert s <= envelope_norm(cs, f, exact=True) + envelope_norm(cs, g, exact=True)


# -- (p, theta, kappa) and the preimage iteration ---------------------------------------------------


def test_sign_rounding_example():
    rep = pthetakappa_check(sign_generators(2), HALF, HALF, 2, [[0.3, -0.8]])
    assert rep.method == "sign"
    assert rep.worst_residual == pytest.approx(0.3)
    assert rep.holds


def test_zero_rounds_to_zero():
    rep = pthetakappa_check(sign_generators(3), HALF, HALF, 2, [[0, 0, 0]])
    assert rep.worst_residual == 0.0


def test_search_on_non_cube_generators():
    G = [[1, 0], [-1, 0], [0, 1], [0, -1]]
    rep = pthetakappa_check(G, HALF, 1, 1, [[0.5, 0.25]])
    assert rep.method == "search"
    assert rep.worst_residual == pytest.approx(0.25)
    assert rep.holds


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_cube_sign_rounding_residual(y):
    rep = pthetakappa_check(sign_generators(4), HALF, HALF, 2, [y])
    assert rep.holds
    assert rep.worst_residual <= 0.5


def test_kappa_too_small_for_sign_rounding():
    with pytest.raises(ParameterError):
        pthetakappa_check(sign_generators(2), HALF, HALF, 0.25, [[0.1, 0.1]], method="sign")


def test_preimage_of_zero():
    res = iterative_preimage(sign_oracle, [0, 0, 0], k_max=5)
    assert all(c == 0 for c in res.coefficients)
    assert all(r == 0 for r in res.residuals)
    assert res.holds


def test_preimage_sign_oracle_dim_4():
    y = [Fraction(3, 8), Fraction(-5, 16), Fraction(1, 2), Fraction(-1, 1024)]
    res = iterative_preimage(sign_oracle, y, k_max=20)
    assert res.holds
    assert all(r <= Fraction(1, 2 ** k) for k, r in enumerate(res.residuals))
    assert res.p_sum <= 1 / (1 - 2 ** -0.5)
    # the partial sums reconstruct y up to the final residual
    approx = [sum(c * x[j] for c, x in zip(res.coefficients, res.points)) / 2 for j in range(4)]
    assert max(abs(a - b) for a, b in zip(approx, y)) == res.residuals[-1]


@given(st.lists(st.integers(-64, 64), min_size=3, max_size=3))
def test_preimage_residuals_decay(nums):
    y = [Fraction(v, 64) for v in nums]
    res = iterative_preimage(sign_oracle, y, k_max=12)
    assert all(b <= a for a, b in zip(res.residuals, res.residuals[1:]))
    assert all(r <= e for r, e in zip(res.residuals, res.envelope))


def test_bad_oracle_reports_step():
    with pytest.raises(OracleError) as err:
        iterative_preimage(lambda y: tuple(0 for _ in y), [HALF, HALF], k_max=3)
    assert err.value.step == 1


def test_oracle_outside_ball():
    with pytest.raises(OracleError):
        iterative_preimage(lambda y: tuple(2 for _ in y), [HALF], k_max=3)


def test_target_outside_ball():
    with pytest.raises(ParameterError):
        iterative_preimage(sign_oracle, [2], k_max=3)
