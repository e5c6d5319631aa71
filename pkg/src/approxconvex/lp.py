"""Dense two-phase simplex solver.

Floating mode runs the pivot loop in the kernel backend (Dantzig pricing,
switching to Bland's rule after a bounded number of pivots). Exact mode runs
Bland's rule on a ``Fraction`` tableau in pure Python and is meant for small
rational programs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import SolverError, StructuralError

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9

RELATIONS = ("<=", "=", ">=")


@dataclass
class LinearProgram:
    """``sense c.x`` subject to ``A[i].x rel[i] b[i]`` and ``lower <= x <= upper``.

    ``lower`` defaults to 0 for every variable; use ``None``/``-inf`` for a
    free variable. ``upper`` defaults to ``+inf``.
    """

    c: list
    A: list
    relations: list
    b: list
    lower: list | None = None
    upper: list | None = None
    sense: str = "min"

    @classmethod
    def build(cls, c, constraints=(), lower=None, upper=None, sense="min"):
        A = [list(a) for a, _, _ in constraints]
        rel = [r for _, r, _ in constraints]
        b = [rhs for _, _, rhs in constraints]
        return cls(list(c), A, rel, b, lower, upper, sense)

    @property
    def n_vars(self):
        return len(self.c)

    def validate(self):
        n = self.n_vars
        if self.sense not in ("min", "max"):
            raise StructuralError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if not (len(self.A) == len(self.relations) == len(self.b)):
            raise StructuralError("constraint arrays have different lengths")
        if isinstance(self.A, np.ndarray):
            if len(self.A) and (self.A.ndim != 2 or self.A.shape[1] != n):
                raise StructuralError(f"constraint matrix has shape {self.A.shape}, expected (*, {n})")
        else:
            for i, row in enumerate(self.A):
                if len(row) != n:
                    raise StructuralError(f"constraint {i} has {len(row)} coefficients, expected {n}")
        for r in self.relations:
            if r not in RELATIONS:
                raise StructuralError(f"unknown relation {r!r}")
        for name, arr in (("lower", self.lower), ("upper", self.upper)):
            if arr is not None and len(arr) != n:
                raise StructuralError(f"{name} bounds have length {len(arr)}, expected {n}")
        for arr in (self.c, self.A, self.b):
            if len(arr) == 0:
                continue
            try:
                vals = np.asarray(arr, dtype=float)
            except (TypeError, ValueError) as exc:
                raise StructuralError(f"malformed coefficients: {exc}") from exc
            if not np.all(np.isfinite(vals)):
                raise StructuralError("non-finite coefficient")

    def to_json(self):
        def enc(v):
            if v is None:
                return None
            if isinstance(v, Fraction):
                return str(v)
            v = float(v)
            return None if math.isinf(v) else v
        return json.dumps({
            "sense": self.sense,
            "c": [enc(v) for v in self.c],
            "constraints": [{"a": [enc(v) for v in row], "rel": r, "b": enc(rhs)}
                            for row, r, rhs in zip(self.A, self.relations, self.b)],
            "lower": None if self.lower is None else [enc(v) for v in self.lower],
            "upper": None if self.upper is None else [enc(v) for v in self.upper],
        })


@dataclass
class LpSolution:
    status: str
    objective_value: float | Fraction | None
    x: list | np.ndarray | None
    iterations: int
    max_violation: float = 0.0

    def to_json(self):
        xs = None if self.x is None else [str(v) if isinstance(v, Fraction) else float(v)
                                          for v in self.x]
        obj = self.objective_value
        return json.dumps({
            "status": self.status,
            "objective_value": str(obj) if isinstance(obj, Fraction) else obj,
            "x": xs,
            "iterations": self.iterations,
        })


def _is_inf(v, sign):
    if v is None:
        return True
    if isinstance(v, Fraction):
        return False
    return math.isinf(v) and (v > 0) == (sign > 0)


class _StandardForm:
    """Maps ``x = x0 + P z`` with ``z >= 0``; rows become ``A' z (rel) b'``."""

    def __init__(self, lp, zero, as_num):
        n = lp.n_vars
        lower = lp.lower if lp.lower is not None else [zero] * n
        upper = lp.upper if lp.upper is not None else [None] * n
        self.cols = []  # (orig var, sign)
        self.x0 = [zero] * n
        extra_rows = []
        for j in range(n):
            lo, hi = lower[j], upper[j]
            lo_inf, hi_inf = _is_inf(lo, -1), _is_inf(hi, +1)
            if not lo_inf:
                self.x0[j] = as_num(lo)
                self.cols.append((j, 1))
                if not hi_inf:
                    extra_rows.append((len(self.cols) - 1, as_num(hi) - as_num(lo)))
            elif not hi_inf:
                self.x0[j] = as_num(hi)
                self.cols.append((j, -1))
            else:
                self.cols.append((j, 1))
                self.cols.append((j, -1))
        self.extra_rows = extra_rows


def _setup(lp, exact):
    lp.validate()
    if exact:
        zero, one = Fraction(0), Fraction(1)
        as_num = Fraction
    else:
        zero, one = 0.0, 1.0
        as_num = float
    sf = _StandardForm(lp, zero, as_num)
    nz = len(sf.cols)
    rows = []  # (coeffs over z, rel, rhs)
    for a, rel, rhs in zip(lp.A, lp.relations, lp.b):
        a = [as_num(v) for v in a]
        coeffs = [a[j] * s for j, s in sf.cols]
        shift = sum((a[j] * sf.x0[j] for j in range(lp.n_vars)), zero)
        rows.append((coeffs, rel, as_num(rhs) - shift))
    for col, cap in sf.extra_rows:
        coeffs = [zero] * nz
        coeffs[col] = one
        rows.append((coeffs, "<=", cap))
    sign = -1 if lp.sense == "max" else 1
    cz = [sign * as_num(lp.c[j]) * s for j, s in sf.cols]
    c0 = sign * sum((as_num(lp.c[j]) * sf.x0[j] for j in range(lp.n_vars)), zero)
    return sf, rows, cz, c0, sign


def solve_lp(lp: LinearProgram, exact=False, backend=None) -> LpSolution:
    """Solve ``lp``; status is 'optimal', 'infeasible' or 'unbounded'."""
    if exact:
        return _solve_exact(lp)
    lp.validate()
    n = lp.n_vars
    c = np.asarray(lp.c, dtype=float).reshape(n)
    A = np.asarray(lp.A, dtype=float).reshape(len(lp.A), n)
    b = np.asarray(lp.b, dtype=float).reshape(len(lp.b))
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise StructuralError("non-finite coefficient")
    sf = _StandardForm(lp, 0.0, float)
    nz = len(sf.cols)
    src = np.array([j for j, _ in sf.cols], dtype=np.int64)
    sgn = np.array([s for _, s in sf.cols], dtype=float)
    x0 = np.asarray(sf.x0, dtype=float)
    rel = list(lp.relations)
    Az = A[:, src] * sgn
    bz = b - A @ x0
    if sf.extra_rows:
        U = np.zeros((len(sf.extra_rows), nz))
        for r, (col, cap) in enumerate(sf.extra_rows):
            U[r, col] = 1.0
        Az = np.vstack([Az, U])
        bz = np.concatenate([bz, [cap for _, cap in sf.extra_rows]])
        rel += ["<="] * len(sf.extra_rows)
    sign = -1.0 if lp.sense == "max" else 1.0
    status, z, iters = solve_standard(Az, bz, sign * c[src] * sgn, rel, backend=backend)
    if status != "optimal":
        return LpSolution(status, None, None, iters)
    x = x0.copy()
    np.add.at(x, src, sgn * z)
    obj = float(c @ x)
    return LpSolution("optimal", obj, x, iters, _violation(lp, x))


def solve_standard(A, b, cost, relations=None, backend=None):
    """Minimise ``cost.z`` subject to ``A z (rel) b``, ``z >= 0``.

    ``relations`` defaults to all equalities. Returns ``(status, z, iterations)``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, nz = A.shape
    if relations is None:
        relations = ["="] * m
    ineq = np.array([r != "=" for r in relations], dtype=bool)
    n_slack = int(ineq.sum())
    M = np.zeros((m, nz + n_slack))
    M[:, :nz] = A
    slack_col = np.full(m, -1, dtype=np.int64)
    slack_col[ineq] = nz + np.arange(n_slack)
    for i in np.flatnonzero(ineq):
        M[i, slack_col[i]] = 1.0 if relations[i] == "<=" else -1.0
    rhs = b.copy()
    neg = rhs < 0
    M[neg] = -M[neg]
    rhs[neg] = -rhs[neg]
    basis = np.full(m, -1, dtype=np.int64)
    for i in np.flatnonzero(ineq):
        if M[i, slack_col[i]] == 1.0:
            basis[i] = slack_col[i]
    need_art = np.flatnonzero(basis < 0)
    n_art = len(need_art)
    nreal = nz + n_slack
    ncols = nreal + n_art
    rows0 = np.zeros((m, ncols + 1))  # original constraint rows, kept for refactoring
    rows0[:, :nreal] = M
    rows0[:, -1] = rhs
    rows0[need_art, nreal + np.arange(n_art)] = 1.0
    basis[need_art] = nreal + np.arange(n_art)
    size = m + ncols
    run = _PivotRunner(50 * size + 1000, max(50, 2 * size), backend)

    if n_art:
        cost1 = np.zeros(ncols + 1)
        cost1[nreal:ncols] = 1.0
        T = _tableau(rows0, basis, cost1)
        status = run(T, rows0, basis, cost1, "phase I")
        scale = 1.0 + np.abs(rhs).max(initial=0.0)
        if -T[m, -1] > FEAS_TOL * scale:
            return "infeasible", None, run.iters
        # drive zero-level artificials out of the basis, drop redundant rows
        keep_row = np.ones(m, dtype=bool)
        keep_t = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= nreal:
                vals = np.abs(T[r, :nreal])
                e = int(np.argmax(vals)) if nreal else 0
                if nreal == 0 or vals[e] <= PIVOT_TOL:
                    keep_t[r] = False
                    keep_row[need_art[basis[r] - nreal]] = False
                    continue
                prow = T[r] / T[r, e]
                T -= np.outer(T[:, e], prow)
                T[r] = prow
                basis[r] = e
        basis = np.ascontiguousarray(basis[keep_t])
        rows0 = np.ascontiguousarray(np.delete(rows0[keep_row], np.s_[nreal:ncols], axis=1))
        m = len(basis)
        ncols = nreal

    cost2 = np.zeros(ncols + 1)
    cost2[:nz] = cost
    T = _tableau(rows0, basis, cost2)
    status = run(T, rows0, basis, cost2, "phase II")
    if status == kernels.UNBOUNDED:
        return "unbounded", None, run.iters
    z = np.zeros(ncols)
    z[basis] = T[:m, -1]
    return "optimal", z[:nz], run.iters


def _tableau(rows0, basis, cost):
    """Tableau ``[B^-1 rows0; cost - c_B B^-1 rows0]`` for ``basis``."""
    m = rows0.shape[0]
    T = np.empty((m + 1, rows0.shape[1]))
    if m:
        B = rows0[:, basis]
        if np.array_equal(B, np.eye(m)):
            T[:m] = rows0
        else:
            T[:m] = np.linalg.solve(B, rows0)
        rhs = T[:m, -1]
        rhs[(rhs < 0) & (rhs > -FEAS_TOL)] = 0.0
    T[m] = cost - cost[basis] @ T[:m]
    return T


class _PivotRunner:
    """Runs kernel pivots in chunks, rebuilding the tableau from the original
    rows between chunks and before accepting a terminal status."""

    chunk = 200

    def __init__(self, max_iter, bland_after, backend):
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.backend = backend
        self.iters = 0

    def __call__(self, T, rows0, basis, cost, phase):
        while True:
            start = self.iters
            limit = min(self.max_iter, start + self.chunk)
            status, self.iters = kernels.simplex_iterate(
                T, basis, limit, self.bland_after, PIVOT_TOL, start, backend=self.backend)
            if status == kernels.ITERATION_CAP and self.iters >= self.max_iter:
                raise SolverError(f"{phase} hit the iteration cap ({self.max_iter})")
            if self.iters == start and status != kernels.ITERATION_CAP:
                return status
            try:
                fresh = _tableau(rows0, basis, cost)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"{phase}: basis became singular") from exc
            T[...] = fresh
            # a terminal status is accepted only once a fresh tableau confirms it


def _violation(lp, x):
    worst = 0.0
    if len(lp.A):
        A = np.asarray(lp.A, dtype=float)
        ax = A @ x
        b = np.asarray(lp.b, dtype=float)
        for v, rel, rhs in zip(ax, lp.relations, b):
            if rel == "<=":
                worst = max(worst, v - rhs)
            elif rel == ">=":
                worst = max(worst, rhs - v)
            else:
                worst = max(worst, abs(v - rhs))
    n = lp.n_vars
    lower = lp.lower if lp.lower is not None else [0.0] * n
    upper = lp.upper if lp.upper is not None else [None] * n
    for j in range(n):
        if not _is_inf(lower[j], -1):
            worst = max(worst, float(lower[j]) - x[j])
        if not _is_inf(upper[j], +1):
            worst = max(worst, x[j] - float(upper[j]))
    return worst


def _pivot_exact(T, r, e):
    piv = T[r][e]
    T[r] = [v / piv for v in T[r]]
    pr = T[r]
    for i in range(len(T)):
        if i != r and T[i][e] != 0:
            f = T[i][e]
            T[i] = [a - f * p for a, p in zip(T[i], pr)]


def _bland_exact(T, basis, ncols, max_iter, it):
    m = len(T) - 1
    while True:
        e = next((k for k in range(ncols) if T[m][k] < 0), None)
        if e is None:
            return kernels.OPTIMAL, it
        if it >= max_iter:
            return kernels.ITERATION_CAP, it
        best, r = None, None
        for i in range(m):
            if T[i][e] > 0:
                ratio = T[i][-1] / T[i][e]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[r]):
                    best, r = ratio, i
        if r is None:
            return kernels.UNBOUNDED, it
        _pivot_exact(T, r, e)
        basis[r] = e
        it += 1


def _solve_exact(lp):
    sf, rows, cz, c0, sign = _setup(lp, exact=True)
    nz = len(sf.cols)
    m = len(rows)
    n_slack = sum(1 for _, rel, _ in rows if rel != "=")
    ncols = nz + n_slack + m
    zero = Fraction(0)
    T = []
    s = nz
    for i, (coeffs, rel, rhs) in enumerate(rows):
        row = list(coeffs) + [zero] * (n_slack + m) + [rhs]
        if rel != "=":
            row[s] = Fraction(1 if rel == "<=" else -1)
            s += 1
        if rhs < 0:
            row = [-v for v in row]
        row[nz + n_slack + i] = Fraction(1)
        T.append(row)
    basis = [nz + n_slack + i for i in range(m)]
    obj = [zero] * (ncols + 1)
    for row in T:
        for k in range(nz + n_slack):
            obj[k] -= row[k]
        obj[-1] -= row[-1]
    T.append(obj)
    max_iter = 50 * (m + ncols) + 1000
    status, it = _bland_exact(T, basis, ncols, max_iter, 0)
    if status == kernels.ITERATION_CAP:
        raise SolverError("exact phase I hit the iteration cap")
    if T[m][-1] != 0:
        return LpSolution("infeasible", None, None, it)
    keep = []
    for r in range(m):
        if basis[r] >= nz + n_slack:
            e = next((k for k in range(nz + n_slack) if T[r][k] != 0), None)
            if e is None:
                continue
            _pivot_exact(T, r, e)
            basis[r] = e
        keep.append(r)
    T = [T[r][:nz + n_slack] + [T[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]
    m = len(T)
    ncols = nz + n_slack
    cost = list(cz) + [zero] * n_slack
    obj = []
    for k in range(ncols):
        obj.append(cost[k] - sum((cost[basis[i]] * T[i][k] for i in range(m)), zero))
    obj.append(-sum((cost[basis[i]] * T[i][-1] for i in range(m)), zero))
    T.append(obj)
    status, it = _bland_exact(T, basis, ncols, max_iter, it)
    if status == kernels.ITERATION_CAP:
        raise SolverError("exact phase II hit the iteration cap")
    if status == kernels.UNBOUNDED:
        return LpSolution("unbounded", None, None, it)
    z = [zero] * ncols
    for i in range(m):
        z[basis[i]] = T[i][-1]
    x = list(sf.x0)
    for k, (j, sgn) in enumerate(sf.cols):
        x[j] += sgn * z[k]
    val = sum((Fraction(lp.c[j]) * x[j] for j in range(lp.n_vars)), zero)
    return LpSolution("optimal", val, x, it, 0.0)
