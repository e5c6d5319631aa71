"""Distances from a sampled function to the convex, affine and Jensen classes."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import ParameterError, SizeLimitError, SolverError
from .grids import GridDomain, SampledFunction, enumerate_midpoint_pairs
from .lp import LinearProgram, solve_lp, solve_standard

DEFAULT_CONSTRAINT_CAP = 1_000_000


def _minorant_lp(X, f, i, backend):
    n, d = X.shape
    A = np.empty((d + 1, n))
    A[:d] = X.T
    A[d] = 1.0
    b = np.append(X[i], 1.0)
    status, z, _ = solve_standard(A, b, f, backend=backend)
    if status != "optimal":
        raise SolverError(f"minorant LP at point {i} returned {status}")
    return float(f @ z)


def convex_minorant(sf: SampledFunction, backend=None) -> SampledFunction:
    """Greatest convex minorant on the grid, one LP per point.

    ``co f(x) = min sum t_i f(x_i)`` over ``sum t_i x_i = x``, ``sum t_i = 1``,
    ``t >= 0``.
    """
    X = np.ascontiguousarray(sf.domain.affine_coords(), dtype=float)
    f = np.asarray(sf.values, dtype=float)
    out = np.empty(len(f))
    for i in range(len(f)):
        # t = e_i is feasible, so the true optimum never exceeds f(x_i)
        out[i] = min(_minorant_lp(X, f, i, backend), f[i])
    return sf.with_values(out)


def distance_to_convex(sf: SampledFunction, backend=None):
    """``(d, g)`` with ``d = max(f - co f) / 2`` and ``g = co f + d``."""
    co = convex_minorant(sf, backend=backend)
    d = 0.5 * float(np.max(sf.values - co.values)) if len(co.values) else 0.0
    return d, co.with_values(co.values + d)


def best_affine_fit(sf: SampledFunction, backend=None):
    """Chebyshev fit ``min_a,b max |f(x) - <a,x> - b|``.

    Returns ``(coeffs, d)`` with ``coeffs = (a_1, ..., a_dim, b)``.
    """
    X = np.asarray(sf.domain.coords, dtype=float)
    return chebyshev_affine(X, sf.values, backend=backend)


def chebyshev_affine(X, values, backend=None, intercept=True):
    """Minimax affine fit of ``values`` at the rows of ``X``.

    With ``intercept=False`` the fit is linear and ``coeffs`` has no constant.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    f = np.asarray(values, dtype=float)
    n = X.shape[0]
    if n == 0:
        raise ParameterError("need at least one point")
    ones = np.ones((n, 1))
    P = np.hstack([X, ones]) if intercept else X
    k = P.shape[1]
    # variables (a, b, e); e >= 0, the rest free
    A = np.vstack([np.hstack([-P, -ones]), np.hstack([P, -ones])])
    rhs = np.concatenate([-f, f])
    c = np.zeros(k + 1)
    c[-1] = 1.0
    lp = LinearProgram(c, A, ["<="] * (2 * n), rhs, lower=[None] * k + [0.0])
    sol = solve_lp(lp, backend=backend)
    if sol.status != "optimal":
        raise SolverError(f"affine fit LP returned {sol.status}")
    coeffs = np.asarray(sol.x[:k])
    d = float(np.max(np.abs(f - P @ coeffs)))
    return coeffs, d


def _midpoint_rows(pairs, n):
    seen = set()
    rows = []
    for x, y, m in pairs:
        if x == y:
            continue
        key = (min(x, y), max(x, y))
        if key in seen:
            continue
        seen.add(key)
        rows.append((key[0], key[1], m))
    return rows


def best_jensen_fit(sf: SampledFunction, backend=None):
    """``(g, d)`` minimising ``max |f - g|`` over midpoint-affine ``g`` on the grid."""
    pairs = enumerate_midpoint_pairs(sf.domain)
    rows = _midpoint_rows(pairs, len(sf.values))
    if not rows:
        raise ParameterError("domain has no nontrivial midpoint pair")
    return _jensen_lp(sf.values, rows, backend, sf)


def jensen_fit_values(values, rows, backend=None):
    """Jensen fit of raw ``values`` under midpoint rows ``(x, y, mid)``."""
    return _jensen_lp(np.asarray(values, dtype=float), rows, backend, None)


def _jensen_lp(f, rows, backend, sf):
    n = len(f)
    eye = np.eye(n)
    e_col = -np.ones((n, 1))
    A = [np.hstack([eye, e_col]), np.hstack([-eye, e_col])]
    rel = ["<="] * (2 * n)
    rhs = [f, -f]
    M = np.zeros((len(rows), n + 1))
    for r, (x, y, m) in enumerate(rows):
        M[r, m] += 1.0
        M[r, x] -= 0.5
        M[r, y] -= 0.5
    A.append(M)
    rel += ["="] * len(rows)
    rhs.append(np.zeros(len(rows)))
    c = np.zeros(n + 1)
    c[-1] = 1.0
    lp = LinearProgram(c, np.vstack(A), rel, np.concatenate(rhs), lower=[None] * n + [0.0])
    sol = solve_lp(lp, backend=backend)
    if sol.status != "optimal":
        raise SolverError(f"Jensen fit LP returned {sol.status}")
    g = np.asarray(sol.x[:n], dtype=float)
    d = float(np.max(np.abs(f - g)))
    if sf is not None:
        g = sf.with_values(g)
    return g, d


@dataclass(frozen=True, eq=False)
class ConvexityConstraints:
    """Rows ``g(point) <= sum_j weights[j] g(support[j])``.

    ``support`` is padded with -1 and ``weights`` with 0 beyond each row's
    ``size``.
    """

    domain: GridDomain
    point: np.ndarray
    support: np.ndarray
    weights: np.ndarray
    size: np.ndarray

    def __len__(self):
        return len(self.point)

    def __iter__(self):
        for r in range(len(self)):
            s = int(self.size[r])
            yield (int(self.point[r]),
                   [(int(self.support[r, j]), float(self.weights[r, j])) for j in range(s)])

    def exact_weights(self, r):
        """Barycentric weights of row ``r`` as Fractions (solved exactly)."""
        s = int(self.size[r])
        ids = [int(v) for v in self.support[r, :s]]
        pts = [self.domain.point(i) for i in ids]
        x = self.domain.point(int(self.point[r]))
        return _exact_barycentric(pts, x)

    def slack(self, g):
        """``sum_j w_j g(s_j) - g(x)`` per row; negative means violated."""
        g = np.asarray(g, dtype=float)
        gs = np.where(self.support >= 0, g[np.maximum(self.support, 0)], 0.0)
        return (self.weights * gs).sum(axis=1) - g[self.point]


def _exact_barycentric(pts, x):
    # least-squares-free exact solve of [P^T; 1] w = [x; 1] on independent rows
    s = len(pts)
    rows = [[p[c] for p in pts] + [x[c]] for c in range(len(x))]
    rows.append([Fraction(1)] * s + [Fraction(1)])
    M = [list(r) for r in rows]
    piv_row = 0
    where = []
    for col in range(s):
        sel = next((r for r in range(piv_row, len(M)) if M[r][col] != 0), None)
        if sel is None:
            continue
        M[piv_row], M[sel] = M[sel], M[piv_row]
        pv = M[piv_row][col]
        M[piv_row] = [v / pv for v in M[piv_row]]
        for r in range(len(M)):
            if r != piv_row and M[r][col] != 0:
                fac = M[r][col]
                M[r] = [a - fac * b for a, b in zip(M[r], M[piv_row])]
        where.append(col)
        piv_row += 1
    w = [Fraction(0)] * s
    for r, col in enumerate(where):
        w[col] = M[r][-1]
    return w


def grid_convexity_constraints(domain: GridDomain, cap: int = DEFAULT_CONSTRAINT_CAP,
                               tol: float = 1e-9) -> ConvexityConstraints:
    """Carathéodory constraints for "g extends to a convex function".

    For every point ``x`` and every affinely independent subset ``S`` of
    other grid points of size 2..dim+1 with ``x`` in the relative interior of
    ``conv S``, emit ``g(x) <= sum t_s g(s)`` with the unique barycentric
    weights. Rows are ordered by ``x`` then by ``S`` in lexicographic order.
    """
    X = np.asarray(domain.affine_coords(), dtype=float)
    n, d = X.shape
    Xh = np.hstack([X, np.ones((n, 1))])  # homogeneous coordinates
    found = []  # (x, subset tuple, weights)
    for s in range(2, min(d + 1, n) + 1):
        subsets = np.array(list(combinations(range(n), s)), dtype=np.int64).reshape(-1, s)
        for lo in range(0, len(subsets), 4096):
            chunk = subsets[lo:lo + 4096]
            M = np.transpose(Xh[chunk], (0, 2, 1))  # (c, d+1, s)
            # affine independence: Gram matrix of the homogeneous columns is nonsingular
            G = np.transpose(M, (0, 2, 1)) @ M
            sv = np.linalg.svd(M, compute_uv=False)
            indep = sv[:, -1] > tol * np.maximum(sv[:, 0], 1.0)
            if not indep.any():
                continue
            chunk, M, G = chunk[indep], M[indep], G[indep]
            Ginv_Mt = np.linalg.solve(G, np.transpose(M, (0, 2, 1)))  # (c, s, d+1)
            W = Ginv_Mt @ Xh.T  # (c, s, n): least-squares weights for every x
            resid = np.abs(M @ W - Xh.T[None]).max(axis=1)  # (c, n)
            inside = (resid <= tol) & (W.min(axis=1) > tol)
            inside[np.arange(len(chunk))[:, None], chunk] = False
            ci, xi = np.nonzero(inside)
            for c_, x_ in zip(ci, xi):
                found.append((int(x_), tuple(int(v) for v in chunk[c_]), W[c_, :, x_]))
            if len(found) > cap:
                raise SizeLimitError("convexity constraints", len(found), cap)
    found.sort(key=lambda r: (r[0], len(r[1]), r[1]))
    k = len(found)
    width = max(2, min(d + 1, n))
    point = np.array([r[0] for r in found], dtype=np.int64)
    support = np.full((k, width), -1, dtype=np.int64)
    weights = np.zeros((k, width))
    size = np.zeros(k, dtype=np.int64)
    for r, (_, S, w) in enumerate(found):
        support[r, :len(S)] = S
        weights[r, :len(S)] = w
        size[r] = len(S)
    return ConvexityConstraints(domain, point, support, weights, size)


@dataclass
class DirectDistance:
    d: float
    multipliers: np.ndarray
    iterations: int


def direct_convex_distance(sf: SampledFunction, constraints: ConvexityConstraints | None = None,
                           backend=None) -> DirectDistance:
    """``min max |f - g|`` over ``g`` satisfying every Carathéodory constraint.

    Independent of ``convex_minorant``. The program is solved through its
    dual, which has one row per grid point and one column per constraint:
    ``max sum f (v - u)`` subject to ``u - v + G^T lam = 0``,
    ``sum (u + v) <= 1`` and ``u, v, lam >= 0``.
    """
    if constraints is None:
        constraints = grid_convexity_constraints(sf.domain)
    f = np.asarray(sf.values, dtype=float)
    n = len(f)
    k = len(constraints)
    G = np.zeros((k, n))
    rows = np.arange(k)
    G[rows, constraints.point] += 1.0
    for j in range(constraints.support.shape[1]):
        used = constraints.support[:, j] >= 0
        np.add.at(G, (rows[used], constraints.support[used, j]), -constraints.weights[used, j])
    A = np.zeros((n + 1, 2 * n + k))
    A[:n, :n] = np.eye(n)
    A[:n, n:2 * n] = -np.eye(n)
    A[:n, 2 * n:] = G.T
    A[n, :2 * n] = 1.0
    b = np.zeros(n + 1)
    b[n] = 1.0
    c = np.concatenate([-f, f, np.zeros(k)])
    lp = LinearProgram(c, A, ["="] * n + ["<="], b, sense="max")
    sol = solve_lp(lp, backend=backend)
    if sol.status != "optimal":
        raise SolverError(f"direct distance LP returned {sol.status}")
    return DirectDistance(float(sol.objective_value), np.asarray(sol.x[2 * n:]), sol.iterations)
