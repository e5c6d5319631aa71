"""Covering systems, their p-quasi-norm, the envelope norm, and the
residual-halving preimage iteration.

The covering system ``S(eps, n)`` has ground set ``{1, ..., m}`` with
``m = (1 + eps) n``, ``Omega`` = all ``n``-subsets and
``A_i = {w in Omega : i in w}``. Functions on ``Omega`` are sequences indexed
like ``cs.omega``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np

from . import config
from .errors import OracleError, ParameterError, SizeLimitError, SolverError
from .lp import LinearProgram, solve_lp
from .polyhedra import enumerate_vertices

TIE_TOL = 1e-12


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v))


def parse_p(p) -> Fraction:
    p = _as_fraction(p)
    if not (0 < p <= 1):
        raise ParameterError(f"p must lie in (0, 1], got {p}")
    return p


@dataclass(frozen=True, eq=False)
class CoveringSystem:
    eps: Fraction
    n: int
    m: int
    omega: tuple  # n-subsets of 1..m, lexicographic
    incidence: np.ndarray  # (|Omega|, m) 0/1

    @property
    def size(self):
        return len(self.omega)

    def A(self, i) -> list:
        """Indices into ``omega`` of the sets containing ``i`` (1-based)."""
        return [int(w) for w in np.flatnonzero(self.incidence[:, i - 1])]

    def indicator_A(self, i) -> list:
        return [int(v) for v in self.incidence[:, i - 1]]

    def ones(self) -> list:
        return [1] * self.size

    @property
    def small_union_size(self) -> int:
        """Largest integer ``j`` with ``j <= eps n``."""
        return math.floor(self.eps * self.n)

    def to_json(self) -> dict:
        return {"eps": f"{self.eps.numerator}/{self.eps.denominator}", "n": self.n}

    @classmethod
    def from_json(cls, data) -> "CoveringSystem":
        return make_covering_system(data["eps"], int(data["n"]))


def make_covering_system(eps, n: int, verify=True) -> CoveringSystem:
    eps = _as_fraction(eps)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if n < 1:
        raise ParameterError("n must be a positive integer")
    m_frac = (1 + eps) * n
    if m_frac.denominator != 1:
        raise ParameterError(f"(1+eps)*n = {m_frac} is not an integer")
    m = int(m_frac)
    count = math.comb(m, n)
    cap = config.max_omega()
    if count > cap:
        raise SizeLimitError("covering system sets", count, cap)
    omega = tuple(tuple(w) for w in combinations(range(1, m + 1), n))
    inc = np.zeros((count, m), dtype=np.int8)
    for r, w in enumerate(omega):
        inc[r, [i - 1 for i in w]] = 1
    inc.setflags(write=False)
    cs = CoveringSystem(eps, n, m, omega, inc)
    if verify:
        a_size = math.comb(m - 1, n - 1)
        if not np.all(inc.sum(axis=0) == a_size):
            raise SolverError("incidence column counts differ from C(m-1, n-1)")
        if not verify_partition_sum(cs).holds:
            raise SolverError("partition identity failed")
    return cs


@dataclass
class SmallUnionReport:
    holds: bool
    checked: int
    witnesses: list  # (J, witness omega) pairs, J as tuples of 1-based labels
    failures: list


def verify_small_union(cs: CoveringSystem) -> SmallUnionReport:
    """Every ``J`` with ``|J| <= eps n`` leaves some ``w`` uncovered.

    The witness is the lexicographically first ``w`` disjoint from ``J``;
    that it avoids every ``A_i`` with ``i in J`` is checked on the incidence
    matrix rather than assumed.
    """
    witnesses, failures = [], []
    labels = range(1, cs.m + 1)
    for size in range(cs.small_union_size + 1):
        for J in combinations(labels, size):
            covered = np.zeros(cs.size, dtype=bool)
            for i in J:
                covered |= cs.incidence[:, i - 1].astype(bool)
            Jset = set(J)
            w = next((k for k, om in enumerate(cs.omega) if not Jset.intersection(om)), None)
            if w is None or covered[w] or covered.all():
                failures.append(J)
            else:
                witnesses.append((J, cs.omega[w]))
    return SmallUnionReport(not failures, len(witnesses) + len(failures), witnesses, failures)


@dataclass
class PartitionReport:
    holds: bool
    counts: list


def verify_partition_sum(cs: CoveringSystem) -> PartitionReport:
    """``sum_i 1_{A_i} = n 1_Omega`` checked per ``w`` in integers."""
    counts = cs.incidence.astype(np.int64).sum(axis=1)
    return PartitionReport(bool(np.all(counts == cs.n)), [int(c) for c in counts])


@dataclass
class QuasiNormCertificate:
    p: Fraction
    c: tuple  # Fractions, one per i in 1..m
    objective: float  # (sum c^p)^(1/p)
    p_sum: float
    active: list  # indices into omega where the covering is tight
    n_vertices: int = 0

    def check(self, cs: CoveringSystem, f) -> bool:
        """Exact feasibility: ``sum_i c_i 1_{A_i}(w) >= |f(w)|`` for every ``w``."""
        absf = [abs(_as_fraction(v)) for v in f]
        for k, w in enumerate(cs.omega):
            if sum(self.c[i - 1] for i in w) < absf[k]:
                return False
        return True

    def to_dict(self):
        return {"p": str(self.p), "c": [str(v) for v in self.c], "objective": self.objective,
                "p_sum": self.p_sum, "active": self.active}


def _p_sum(c, p: Fraction) -> float:
    pf = float(p)
    return math.fsum(float(v) ** pf for v in c if v)


def _objective(p_sum: float, p: Fraction) -> float:
    if p_sum == 0:
        return 0.0
    return p_sum ** (1.0 / float(p))


def covering_polyhedron(cs: CoveringSystem, f):
    """``(A, b)`` of ``{c >= 0 : sum_i c_i 1_{A_i} >= |f|}``; covering rows first."""
    absf = [abs(_as_fraction(v)) for v in f]
    if len(absf) != cs.size:
        raise ParameterError(f"f has {len(absf)} values, expected {cs.size}")
    A = [[int(v) for v in cs.incidence[k]] for k in range(cs.size)]
    b = list(absf)
    for i in range(cs.m):
        A.append([int(j == i) for j in range(cs.m)])
        b.append(Fraction(0))
    return A, b


def quasi_norm(cs: CoveringSystem, f, p=Fraction(1, 2)) -> QuasiNormCertificate:
    """``||f||_p = inf (sum c_i^p)^(1/p)`` over ``|f| <= sum c_i 1_{A_i}``.

    For ``p < 1`` the objective is concave, so the minimum sits at a vertex of
    the covering polyhedron; all vertices are enumerated exactly. For ``p = 1``
    the exact LP is solved. Ties within ``1e-12`` go to the lexicographically
    least ``c``.
    """
    p = parse_p(p)
    A, b = covering_polyhedron(cs, f)
    absf = b[:cs.size]
    if p == 1:
        lp = LinearProgram([1] * cs.m, [row for row in A[:cs.size]], [">="] * cs.size,
                           absf, lower=[Fraction(0)] * cs.m)
        sol = solve_lp(lp, exact=True)
        if sol.status != "optimal":
            raise SolverError(f"exact LP returned {sol.status}")
        c = tuple(Fraction(v) for v in sol.x)
        n_vertices = 0
    else:
        verts = enumerate_vertices(A, b)
        if not verts:
            raise SolverError("covering polyhedron has no vertex")
        best, best_val = None, None
        for v in verts:  # sorted lexicographically, so the first within tolerance wins
            val = _p_sum(v.coords, p)
            if best is None or val < best_val - TIE_TOL:
                best, best_val = v, val
        c = best.coords
        n_vertices = len(verts)
    ps = _p_sum(c, p)
    active = [k for k, w in enumerate(cs.omega) if sum(c[i - 1] for i in w) == absf[k]]
    cert = QuasiNormCertificate(p, c, _objective(ps, p), ps, active, n_vertices)
    if not cert.check(cs, f):
        raise SolverError("quasi-norm certificate is infeasible")
    return cert


def quasi_norm_lower_bound_value(eps, n, p) -> float:
    """``n^(1/p - 1) eps^(1/p) / (1 + eps)``."""
    p = float(parse_p(p))
    eps = float(_as_fraction(eps))
    return n ** (1.0 / p - 1.0) * eps ** (1.0 / p) / (1.0 + eps)


@dataclass
class LowerBoundReport:
    value: float
    vertices_checked: int
    min_heavy: int  # smallest |J| seen, J = {i : c_i >= 1/((1+eps) n)}
    heavy_exceeds: bool  # every feasible vertex had |J| > eps n
    implied_bound: float  # min over vertices of |J|^(1/p) / ((1+eps) n)


def heavy_coordinates(cs: CoveringSystem, c) -> list:
    """``{i : c_i >= 1/((1+eps) n)}`` as 1-based labels."""
    thr = Fraction(1, 1) / ((1 + cs.eps) * cs.n)
    return [i + 1 for i, v in enumerate(c) if _as_fraction(v) >= thr]


def quasi_norm_lower_bound(cs: CoveringSystem, p=Fraction(1, 2)) -> LowerBoundReport:
    """Closed-form bound on ``||1_Omega||_p`` plus the counting argument behind it.

    For every vertex ``c`` of the covering polyhedron of ``1_Omega`` the set of
    heavy coordinates is counted and checked to exceed ``eps n``. Since every
    feasible point dominates a convex combination of vertices plus a recession
    direction, checking vertices and the closed form together is the finite
    certificate.
    """
    p = parse_p(p)
    value = quasi_norm_lower_bound_value(cs.eps, cs.n, p)
    A, b = covering_polyhedron(cs, cs.ones())
    verts = enumerate_vertices(A, b)
    en = cs.eps * cs.n
    heavy = [len(heavy_coordinates(cs, v.coords)) for v in verts]
    min_heavy = min(heavy) if heavy else 0
    implied = min_heavy ** (1.0 / float(p)) / float((1 + cs.eps) * cs.n)
    return LowerBoundReport(value, len(verts), min_heavy, all(h > en for h in heavy), implied)


def dual_norm(cs: CoveringSystem, g):
    """``max_i sum_{w in A_i} |g(w)|``; exact for rational input."""
    if len(g) != cs.size:
        raise ParameterError(f"g has {len(g)} values, expected {cs.size}")
    exact = all(isinstance(v, (int, Fraction, np.integer)) for v in g)
    if exact:
        absg = [abs(Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)) for v in g]
        best = Fraction(0)
        for i in range(1, cs.m + 1):
            s = sum((absg[k] for k in cs.A(i)), Fraction(0))
            best = max(best, s)
        return best
    absg = np.abs(np.asarray(g, dtype=float))
    return float((cs.incidence.T.astype(float) @ absg).max(initial=0.0))


def envelope_norm(cs: CoveringSystem, f, exact=False, backend=None):
    """``sup { <f, g> : dual_norm(g) <= 1 }`` by linear programming.

    With ``g = sgn(f) u`` the program reads ``max <|f|, u>`` subject to
    ``sum_{w in A_i} u_w <= 1`` and ``u >= 0``.
    """
    if len(f) != cs.size:
        raise ParameterError(f"f has {len(f)} values, expected {cs.size}")
    if exact:
        absf = [abs(_as_fraction(v)) for v in f]
        A = [[int(v) for v in cs.incidence[:, i]] for i in range(cs.m)]
        lp = LinearProgram(absf, A, ["<="] * cs.m, [1] * cs.m,
                           lower=[Fraction(0)] * cs.size, sense="max")
        sol = solve_lp(lp, exact=True)
    else:
        absf = np.abs(np.asarray([float(v) for v in f]))
        A = cs.incidence.T.astype(float)
        lp = LinearProgram(absf, A, ["<="] * cs.m, np.ones(cs.m), sense="max")
        sol = solve_lp(lp, backend=backend)
    if sol.status != "optimal":
        raise SolverError(f"envelope LP returned {sol.status}")
    return sol.objective_value


@dataclass
class GapRow:
    n: int
    quasi_norm: float
    lower_bound: float
    envelope_norm: float
    ratio: float
    ratio_bound: float
    holds: bool

    def as_tuple(self):
        return (self.n, self.quasi_norm, self.lower_bound, self.envelope_norm,
                self.ratio, self.ratio_bound)


GAP_COLUMNS = ("n", "quasi_norm", "lower_bound", "envelope_norm", "ratio", "ratio_bound")


def envelope_gap_report(eps, n_list: Sequence[int], p=Fraction(1, 2), backend=None) -> list:
    """Per-block rows ``(n, ||1_Omega||_p, bound, ||1_Omega||_co, ratio)``.

    A row holds when the quasi-norm meets its bound and the ratio meets
    ``n^(1/p-1) eps^(1/p) / (1+eps)^2``.
    """
    p = parse_p(p)
    eps = _as_fraction(eps)
    rows = []
    for n in n_list:
        cs = make_covering_system(eps, n)
        one = cs.ones()
        qn = quasi_norm(cs, one, p).objective
        lb = quasi_norm_lower_bound_value(eps, n, p)
        env = float(envelope_norm(cs, one, backend=backend))
        ratio = qn / env
        rb = lb / (1.0 + float(eps))
        holds = qn >= lb * (1 - 1e-12) and ratio >= rb * (1 - 1e-12)
        rows.append(GapRow(n, qn, lb, env, ratio, rb, holds))
    return rows


# -- the (p, theta, kappa) property on finite sup-norm balls ---------------


@dataclass
class PThetaKappaReport:
    holds: bool
    worst_residual: float
    bound: float
    witness: list | None  # the sample achieving the worst residual
    method: str
    n_samples: int
    details: list = field(default_factory=list)  # (residual, generator index, scale)


def sign_generators(dim: int) -> np.ndarray:
    """All ``2**dim`` sign vectors, lexicographic in ``(-1, 1)``."""
    return np.array(list(product((-1, 1), repeat=dim)), dtype=float)


def sign_vector(y) -> np.ndarray:
    """``sgn y`` with ``sgn 0 = +1`` so the result is a cube vertex."""
    y = np.asarray(y, dtype=float)
    return np.where(y < 0, -1.0, 1.0)


def _best_scaled_generator(y, g, kappa):
    # minimise max_k |y_k - s g_k| over s in [-kappa, kappa]; the optimum is a
    # crossing of two of the lines |y_k - s g_k| or an endpoint
    cands = {-kappa, kappa, 0.0}
    d = len(y)
    for k in range(d):
        if g[k] != 0:
            cands.add(y[k] / g[k])
        for l in range(k + 1, d):
            for sgn in (1.0, -1.0):
                den = g[k] - sgn * g[l]
                if den != 0:
                    cands.add((y[k] - sgn * y[l]) / den)
    best = None
    for s in sorted(cands):
        s = min(max(s, -kappa), kappa)
        r = float(np.max(np.abs(y - s * g))) if d else 0.0
        if best is None or r < best[0] - 1e-15:
            best = (r, s)
    return best


def pthetakappa_check(generators, p, theta, kappa, sample, method="auto") -> PThetaKappaReport:
    """Check ``y in theta B + kappa A`` for each sampled ``y``.

    ``A`` is the ``p``-convex hull of the symmetric generator set and ``B`` its
    convex hull, both in sup-norm coordinates. ``method='sign'`` uses the
    rounding ``kappa a = sgn(y) / 2`` (the generator ``sgn y`` scaled by
    ``1/(2 kappa)``, a member of ``A`` when ``kappa >= 1/2``); ``'search'``
    optimises a single scaled generator ``t g`` with ``|t| <= 1``. ``'auto'``
    picks ``sign`` when the generators are exactly the cube vertices.
    """
    parse_p(p)
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    Y = np.atleast_2d(np.asarray(sample, dtype=float))
    dim = G.shape[1]
    radius = float(np.abs(G).max()) if G.size else 0.0
    bound = float(theta) * radius
    if method == "auto":
        is_cube = G.shape[0] == 2 ** dim and set(map(tuple, G)) == set(map(tuple, sign_generators(dim)))
        method = "sign" if is_cube else "search"
    if method == "sign" and float(kappa) < 0.5:
        raise ParameterError("sign rounding needs kappa >= 1/2")
    details = []
    worst, witness = -1.0, None
    for y in Y:
        if not np.any(y):
            res, gi, scale = 0.0, -1, 0.0
        elif method == "sign":
            u = sign_vector(y)
            res = float(np.max(np.abs(y - 0.5 * u)))
            gi = int(np.flatnonzero((G == u).all(axis=1))[0]) if (G == u).all(axis=1).any() else -1
            scale = 1.0 / (2.0 * float(kappa))
        elif method == "search":
            res, gi, scale = float(np.max(np.abs(y))), -1, 0.0
            for j, g in enumerate(G):
                r, s = _best_scaled_generator(y, g, float(kappa))
                if r < res - 1e-15:
                    res, gi, scale = r, j, s / float(kappa)
        else:
            raise ParameterError(f"unknown method {method!r}")
        details.append((res, gi, scale))
        if res > worst:
            worst, witness = res, y.tolist()
    worst = max(worst, 0.0)
    return PThetaKappaReport(worst <= bound + 1e-12, worst, bound, witness, method, len(Y), details)


# -- iterative preimage ------------------------------------------------------


def sup_norm_exact(v) -> Fraction:
    return max((abs(x) for x in v), default=Fraction(0))


def sign_oracle(y):
    """Half oracle for the identity on the sup-norm cube: ``x = sgn y``."""
    return tuple(Fraction(-1) if v < 0 else Fraction(1) for v in y)


@dataclass
class PreimageResult:
    coefficients: list  # lambda_i (Fractions); the preimage is (1/2) sum lambda_i x_i
    points: list  # x_i
    residuals: list  # ||r_k||, k = 0..steps
    envelope: list  # (1/2 + eps)^k
    p_sum: float  # sum (lambda_i ||x_i||)^p
    p_sum_bound: float
    holds: bool


def iterative_preimage(half_oracle: Callable, y, eps=0, k_max: int = 20, p=Fraction(1, 2),
                       T: Callable | None = None, x_norm: Callable | None = None) -> PreimageResult:
    """Approximate a preimage of ``y`` by repeated halving of the residual.

    Step ``i`` calls the oracle on the normalised residual ``r / ||r||`` and
    subtracts ``(||r|| / 2) T x_i``. The oracle contract
    ``||y' - T x / 2|| <= (1/2 + eps) ||y'||`` is checked at every step.
    Arithmetic is exact when ``y`` and the oracle output are rational.
    """
    p = parse_p(p)
    eps = _as_fraction(eps)
    q = Fraction(1, 2) + eps
    if q >= 1:
        raise ParameterError("need eps < 1/2")
    T = T or (lambda x: tuple(x))
    x_norm = x_norm or sup_norm_exact
    r = tuple(_as_fraction(v) for v in y)
    if sup_norm_exact(r) > 1:
        raise ParameterError("target must lie in the unit ball")
    coeffs, points = [], []
    residuals = [sup_norm_exact(r)]
    envelope = [Fraction(1)]
    for step in range(1, k_max + 1):
        nr = residuals[-1]
        envelope.append(envelope[-1] * q)
        if nr == 0:
            coeffs.append(Fraction(0))
            points.append(tuple(Fraction(0) for _ in r))
            residuals.append(Fraction(0))
            continue
        yp = tuple(v / nr for v in r)
        x = tuple(_as_fraction(v) for v in half_oracle(yp))
        if x_norm(x) > 1:
            raise OracleError(f"oracle returned a point of norm {x_norm(x)} > 1", step)
        tx = tuple(_as_fraction(v) for v in T(x))
        after = tuple(a - b / 2 for a, b in zip(yp, tx))
        if sup_norm_exact(after) > q * sup_norm_exact(yp):
            raise OracleError(f"oracle did not halve the residual at step {step}", step)
        r = tuple(a - nr * b / 2 for a, b in zip(r, tx))
        coeffs.append(nr)
        points.append(x)
        residuals.append(sup_norm_exact(r))
    pf = float(p)
    p_sum = math.fsum((float(c) * float(x_norm(x))) ** pf for c, x in zip(coeffs, points) if c)
    p_bound = 1.0 / (1.0 - float(q) ** pf)
    ok = all(rk <= ek for rk, ek in zip(residuals, envelope)) and p_sum <= p_bound + 1e-9
    return PreimageResult(coeffs, points, residuals, envelope, p_sum, p_bound, ok)
