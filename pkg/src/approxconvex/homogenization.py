"""Radial lifts of approximately affine / Jensen functions and stability bounds.

A lift fits ``f - f(0)`` on every line through the origin by a 1-D best fit
and extends the fit homogeneously along the line. Degree 1 stores a slope per
line (``f*(t u) = slope t`` for every real ``t``). Degree 2 stores the values
of a Jensen fit vanishing at 0 and extends them by ``f*(2x) = 2 f*(x)``, so it
is defined on dyadic multiples of the sampled points only.

Lines are parametrised by ``t``, the signed distance from 0 in the chosen
norm, so ``t u`` with ``||u|| = 1``. In grid mode a line is a primitive
integer direction ``p`` and its samples are ``s p / 2**k`` for integer ``s``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .defects import DefectReport, affinity_defect, norm_function
from .distances import best_affine_fit, chebyshev_affine, jensen_fit_values
from .errors import DomainError, EvaluationError, OffRayError, ParameterError
from .grids import GridDomain, SampledFunction, enumerate_convex_triples

PARALLEL_TOL = 1e-12
INTEGRAL_TOL = 1e-9


def _norm1(v, kind):
    return float(norm_function(kind)(np.asarray(v, dtype=float)[None])[0])


def body_radii(body_kind: str, dim: int, norm: str = "sup"):
    """``(r0, R0)``: largest inscribed and smallest circumscribed norm balls.

    Bodies without 0 in the interior raise DomainError.
    """
    root = math.sqrt(dim)
    table = {
        ("cube", "sup"): (1.0, 1.0), ("cube", "l2"): (1.0, root), ("cube", "l1"): (1.0, float(dim)),
        ("ball_euclid", "sup"): (1.0 / root, 1.0), ("ball_euclid", "l2"): (1.0, 1.0),
        ("ball_euclid", "l1"): (1.0, root),
    }
    kind = "cube" if body_kind == "ball_sup" else body_kind
    if kind in ("simplex", "positive_cone_section"):
        raise DomainError(f"0 is not an interior point of {body_kind!r} (r0 = 0)")
    key = (kind, "sup" if norm in ("linf", "max") else "l2" if norm == "euclid" else norm)
    if key not in table:
        raise ParameterError(f"no radii for body {body_kind!r} and norm {norm!r}")
    return table[key]


@dataclass(frozen=True, eq=False)
class RadialLift:
    """Homogeneous function given line by line.

    ``directions[j]`` is a unit vector (in ``norm``); sample ``s`` on line
    ``j`` is the point ``s * steps[j] * directions[j]``. Degree 1 keeps
    ``slopes`` (per unit ``t``); degree 2 keeps ``tables[j]``, the fitted
    values at ``s = -half_spans[j] .. half_spans[j]``.
    """

    degree: int
    norm: str
    directions: np.ndarray
    steps: np.ndarray
    slopes: np.ndarray | None
    tables: tuple | None
    half_spans: np.ndarray
    fit_error: np.ndarray
    lift_error: np.ndarray
    f0: float
    primitives: np.ndarray | None = None
    denom_power: int | None = None
    off_ray: str = "error"

    @property
    def n_lines(self):
        return len(self.directions)

    @property
    def per_line_max_error(self):
        return float(self.lift_error.max()) if len(self.lift_error) else 0.0

    def __post_init__(self):
        if self.degree not in (1, 2):
            raise ParameterError("homogeneity degree must be 1 or 2")
        if self.off_ray not in ("error", "nearest"):
            raise ParameterError("off_ray must be 'error' or 'nearest'")
        if self.primitives is not None:
            object.__setattr__(self, "_prim_index",
                               {tuple(int(v) for v in p): j for j, p in enumerate(self.primitives)})
        U = np.asarray(self.directions, dtype=float)
        object.__setattr__(self, "_unit2", U / np.linalg.norm(U, axis=1)[:, None])

    # -- evaluation on a line --------------------------------------------------

    def line_value(self, j: int, s: float, exact_only: bool = True):
        """``f*`` at sample parameter ``s`` on line ``j``; None if undefined.

        With ``exact_only=False`` a degree-2 value between dyadic samples is
        linearly interpolated.
        """
        if self.degree == 1:
            return float(self.slopes[j] * (s * self.steps[j]))
        S = int(self.half_spans[j])
        table = self.tables[j]
        scale = 1.0
        while abs(s) > S:
            s /= 2.0
            scale *= 2.0
        while s != round(s) and abs(2 * s) <= S:
            s *= 2.0
            scale /= 2.0
        if s == round(s):
            return float(scale * table[int(round(s)) + S])
        if exact_only:
            return None
        grid = np.arange(-S, S + 1, dtype=float)
        return float(scale * np.interp(s, grid, table))

    def _locate(self, x):
        """``(line, s, angle)`` for a float point; ``line`` is None at the origin."""
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            return None, 0.0, 0.0
        if self.primitives is not None:
            w = x * (1 << self.denom_power)
            wr = np.round(w)
            if np.all(np.abs(w - wr) <= INTEGRAL_TOL):
                w = wr.astype(np.int64)
                g = int(np.gcd.reduce(np.abs(w)))
                p = w // g
                first = p[np.flatnonzero(p)[0]]
                if first < 0:
                    p, g = -p, -g
                j = self._prim_index.get(tuple(int(v) for v in p))
                if j is not None:
                    return j, float(g), 0.0
        xh = x / float(np.linalg.norm(x))
        cos = self._unit2 @ xh
        j = int(np.argmax(np.abs(cos)))
        # arctan2 form stays accurate for nearly parallel vectors
        perp = float(np.linalg.norm(xh - cos[j] * self._unit2[j]))
        angle = math.atan2(perp, abs(float(cos[j])))
        u = self.directions[j]
        tau = float(x @ u) / float(u @ u)
        return j, tau / self.steps[j], angle

    def evaluate(self, x):
        """``(value, angle)``; ``angle`` is 0 on a sampled ray.

        Raises OffRayError off the sampled rays unless the lift was built with
        ``off_ray='nearest'``, in which case the nearest direction is used.
        """
        j, s, angle = self._locate(x)
        if j is None:
            return 0.0, 0.0
        on_ray = angle <= PARALLEL_TOL
        if not on_ray and self.off_ray == "error":
            raise OffRayError(f"point {np.asarray(x).tolist()} is not on a sampled ray")
        v = self.line_value(j, s, exact_only=self.off_ray == "error")
        if v is None:
            raise OffRayError(f"point {np.asarray(x).tolist()} is not a dyadic multiple of a sample")
        return v, angle

    def __call__(self, x):
        return self.evaluate(x)[0]

    def values_at_numerators(self, W):
        """Vectorised grid-mode evaluation at integer numerators ``W``.

        Returns ``(values, ok)``; ``ok`` is False where the point is off the
        sampled rays (or, for degree 2, not a dyadic multiple of a sample).
        """
        if self.primitives is None:
            raise ParameterError("lift was not built on a grid")
        W = np.atleast_2d(np.asarray(W, dtype=np.int64))
        g = np.gcd.reduce(np.abs(W), axis=1)
        zero = g == 0
        gs = np.where(zero, 1, g)
        P = W // gs[:, None]
        nz = P != 0
        first = np.where(nz.any(axis=1), P[np.arange(len(P)), nz.argmax(axis=1)], 1)
        flip = first < 0
        P[flip] *= -1
        s = np.where(flip, -gs, gs)
        vals = np.zeros(len(W))
        ok = np.ones(len(W), dtype=bool)
        for r, (row, sr) in enumerate(zip(P.tolist(), s.tolist())):
            if zero[r]:
                continue
            j = self._prim_index.get(tuple(row))
            v = None if j is None else self.line_value(j, float(sr))
            if v is None:
                ok[r] = False
            else:
                vals[r] = v
        return vals, ok

    def to_dict(self):
        return {
            "degree": self.degree,
            "norm": self.norm,
            "f0": self.f0,
            "directions": self.directions.tolist(),
            "steps": self.steps.tolist(),
            "slopes": None if self.slopes is None else self.slopes.tolist(),
            "tables": None if self.tables is None else [t.tolist() for t in self.tables],
            "fit_error": self.fit_error.tolist(),
            "lift_error": self.lift_error.tolist(),
        }


# -- construction --------------------------------------------------------------


def _canonical(w):
    g = int(np.gcd.reduce(np.abs(w)))
    p = w // g
    if p[np.flatnonzero(p)[0]] < 0:
        return tuple(int(v) for v in -p), -g
    return tuple(int(v) for v in p), g


def _grid_lines(domain: GridDomain, directions=None):
    """Group the nonzero grid points by line through 0: ``{primitive: [(s, index)]}``."""
    origin = domain.find([0] * domain.dim)
    if origin is None:
        raise DomainError("the grid does not contain the origin")
    lines = {}
    for i, w in enumerate(domain.numerators):
        if i == origin:
            continue
        p, s = _canonical(w)
        lines.setdefault(p, []).append((s, i))
    if directions is not None:
        wanted = {_canonical(np.asarray(d, dtype=np.int64))[0] for d in directions}
        missing = wanted - set(lines)
        if missing:
            raise ParameterError(f"directions without grid points: {sorted(missing)}")
        lines = {p: v for p, v in lines.items() if p in wanted}
    out = {}
    for p, pts in sorted(lines.items()):
        pts = sorted(pts + [(0, origin)])
        s_vals = [s for s, _ in pts]
        if s_vals[0] >= 0 or s_vals[-1] <= 0:
            raise DomainError(f"0 is not interior along direction {p} (r0 = 0)")
        out[p] = pts
    return origin, out


def _jensen_rows(s_vals):
    pos = {s: r for r, s in enumerate(s_vals)}
    rows = []
    for a in range(len(s_vals)):
        for b in range(a + 1, len(s_vals)):
            tot = s_vals[a] + s_vals[b]
            if tot % 2 == 0 and tot // 2 in pos:
                rows.append((a, b, pos[tot // 2]))
    return rows


def _fit_line(degree, s_vals, g, step, backend):
    """``(slope_or_table, fit_error, lift_error)`` for one line of ``g = f - f(0)``."""
    s_arr = np.asarray(s_vals, dtype=float)
    if degree == 1:
        coeffs, d = chebyshev_affine((s_arr * step)[:, None], g, backend=backend)
        slope = float(coeffs[0])
        lift_err = float(np.max(np.abs(g - slope * s_arr * step)))
        return slope, d, lift_err
    S = int(max(-s_vals[0], s_vals[-1]))
    if list(s_vals) != list(range(-S, S + 1)):
        raise DomainError("degree-2 lift needs a symmetric contiguous line grid")
    a, d = jensen_fit_values(g, _jensen_rows(list(s_vals)), backend=backend)
    table = np.asarray(a) - a[S]
    lift_err = float(np.max(np.abs(g - table)))
    return table, d, lift_err


def _build(f, degree, directions, grid_per_line, norm, off_ray, backend):
    if isinstance(f, SampledFunction):
        if grid_per_line is not None:
            raise ParameterError("grid_per_line applies to evaluator input only")
        dom = f.domain
        body_radii(dom.body_kind, dom.dim, norm)  # rejects bodies with r0 = 0
        origin, lines = _grid_lines(dom, directions)
        f0 = float(f.values[origin])
        scale = float(dom.scale)
        prims, units, steps, fits, fit_err, lift_err, spans = [], [], [], [], [], [], []
        for p, pts in lines.items():
            pv = np.asarray(p, dtype=float)
            length = _norm1(pv, norm)
            s_vals = [s for s, _ in pts]
            g = f.values[[i for _, i in pts]] - f0
            fit, d, le = _fit_line(degree, s_vals, g, length / scale, backend)
            prims.append(p)
            units.append(pv / length)
            steps.append(length / scale)
            fits.append(fit)
            fit_err.append(d)
            lift_err.append(le)
            spans.append(max(-s_vals[0], s_vals[-1]))
        prim_arr = np.asarray(prims, dtype=np.int64)
        denom = dom.denom_power
    else:
        if not callable(f):
            raise ParameterError("f must be a SampledFunction or a callable")
        if directions is None or grid_per_line is None:
            raise ParameterError("evaluator input needs directions and grid_per_line")
        G = int(grid_per_line)
        if G < 1:
            raise ParameterError("grid_per_line must be positive")
        units = []
        for d in directions:
            d = np.asarray(d, dtype=float)
            nd = _norm1(d, norm)
            if nd == 0:
                raise DomainError("zero direction")
            units.append(d / nd)
        U = np.asarray(units)
        U2 = U / np.linalg.norm(U, axis=1)[:, None]
        cos = np.abs(U2 @ U2.T) - np.eye(len(U))
        if len(U) > 1 and cos.max() >= 1 - PARALLEL_TOL:
            raise ParameterError("directions must be pairwise non-parallel")
        try:
            f0 = float(f(np.zeros(U.shape[1])))
        except (ValueError, ZeroDivisionError, DomainError) as exc:
            raise EvaluationError(f"f is not finite at 0: {exc}") from exc
        s_vals = list(range(-G, G + 1))
        steps, fits, fit_err, lift_err, spans = [], [], [], [], []
        for u in U:
            vals = np.array([float(f(s / G * u)) for s in s_vals])
            if not np.all(np.isfinite(vals)):
                raise EvaluationError("f is not finite on a line grid")
            fit, d, le = _fit_line(degree, s_vals, vals - f0, 1.0 / G, backend)
            steps.append(1.0 / G)
            fits.append(fit)
            fit_err.append(d)
            lift_err.append(le)
            spans.append(G)
        prim_arr, denom = None, None
    return RadialLift(
        degree=degree,
        norm=norm,
        directions=np.asarray(units, dtype=float),
        steps=np.asarray(steps, dtype=float),
        slopes=np.asarray(fits, dtype=float) if degree == 1 else None,
        tables=tuple(np.asarray(t) for t in fits) if degree == 2 else None,
        half_spans=np.asarray(spans, dtype=np.int64),
        fit_error=np.asarray(fit_err, dtype=float),
        lift_error=np.asarray(lift_err, dtype=float),
        f0=f0,
        primitives=prim_arr,
        denom_power=denom,
        off_ray=off_ray,
    )


def radial_affine_lift(f, directions=None, grid_per_line=None, norm="sup",
                       off_ray="error", backend=None) -> RadialLift:
    """Degree-1 lift from per-line Chebyshev affine fits with the constant dropped.

    ``f`` is a SampledFunction on a grid containing 0 (lines are every
    direction through a grid point, or the given integer ``directions``) or
    a callable on the unit ball of ``norm`` together with float
    ``directions`` and ``grid_per_line`` samples on each side of 0.
    ``fit_error`` per line is the 1-D Chebyshev error; ``lift_error`` is
    ``max |f - f(0) - f*|`` on the line.
    """
    return _build(f, 1, directions, grid_per_line, norm, off_ray, backend)


def radial_jensen_lift(f, directions=None, grid_per_line=None, norm="sup",
                       off_ray="error", backend=None) -> RadialLift:
    """Degree-2 lift: per-line best Jensen fit ``a``, then ``L = a - a(0)``.

    ``L`` satisfies ``L(2s) = 2 L(s)`` and ``L(-s) = -L(s)`` on the line grid
    and is extended beyond it by the same doubling rule.
    """
    return _build(f, 2, directions, grid_per_line, norm, off_ray, backend)


# -- quasi-linearity -----------------------------------------------------------


def lift_quasilinearity(lift: RadialLift, pair_sample=None, norm=None,
                        domain: GridDomain | None = None) -> DefectReport:
    """``max |f*(x+y) - f*(x) - f*(y)| / (||x|| + ||y||)`` over pairs.

    ``pair_sample`` is ``(X, Y)`` float arrays. Without it, a grid lift uses
    every unordered pair of points of ``domain`` (integer numerators); pairs
    whose sum is off the sampled rays are skipped and counted in ``meta``.
    Off-ray points in an explicit sample follow the lift's ``off_ray`` mode;
    the largest angular error is reported.
    """
    norm = norm or lift.norm
    nf = norm_function(norm)
    if pair_sample is None:
        if lift.primitives is None or domain is None:
            raise ParameterError("default pairs need a grid lift and its domain")
        N = domain.numerators
        fx, okx = lift.values_at_numerators(N)
        ia, ib = np.triu_indices(len(N))
        fs, oks = lift.values_at_numerators(N[ia] + N[ib])
        keep = oks & okx[ia] & okx[ib]
        coords = domain.coords
        den = nf(coords[ia]) + nf(coords[ib])
        keep &= den > 0
        ia, ib = ia[keep], ib[keep]
        resid = np.abs(fs[keep] - fx[ia] - fx[ib]) / den[keep]
        X, Y = coords[ia], coords[ib]
        skipped = int((~oks).sum())
        angle = 0.0
    else:
        X = np.atleast_2d(np.asarray(pair_sample[0], dtype=float))
        Y = np.atleast_2d(np.asarray(pair_sample[1], dtype=float))
        if X.shape != Y.shape:
            raise ParameterError("pair arrays differ in shape")
        angle = 0.0
        vals = []
        for Z in (X, Y, X + Y):
            out = np.empty(len(Z))
            for r, z in enumerate(Z):
                out[r], a = lift.evaluate(z)
                angle = max(angle, a)
            vals.append(out)
        den = nf(X) + nf(Y)
        keep = den > 0
        resid = np.abs(vals[2] - vals[0] - vals[1])[keep] / den[keep]
        X, Y = X[keep], Y[keep]
        skipped = 0
    if len(resid) == 0:
        return DefectReport("lift_quasilinearity", 0.0, None, 0,
                            meta={"skipped_off_ray": skipped, "max_angular_error": angle})
    k = int(np.argmax(resid))
    witness = {"x": X[k].tolist(), "y": Y[k].tolist(), "residual": float(resid[k])}
    meta = {"skipped_off_ray": skipped, "max_angular_error": angle,
            "approximate": bool(angle > PARALLEL_TOL), "norm": norm if isinstance(norm, str) else "custom"}
    return DefectReport("lift_quasilinearity", float(resid[k]), witness, int(len(resid)), meta=meta)


# -- constant accounting ---------------------------------------------------------


@dataclass(frozen=True)
class StabilityBudget:
    """Geometry of ``D`` in the norm (``r0 B ⊂ D ⊂ R0 B``), the K-space
    constant ``M`` and optional ``delta`` (both declared assumptions), and
    the defect level ``epsilon``."""

    r0: float
    R0: float
    M: float = 200.0
    delta: float | None = None
    epsilon: float = 1.0

    def __post_init__(self):
        if not (0 < self.r0 <= self.R0):
            raise ParameterError(f"need 0 < r0 <= R0, got r0={self.r0}, R0={self.R0}")
        if not self.M > 0:
            raise ParameterError("M must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ParameterError("delta must be positive")
        if not self.epsilon >= 0:
            raise ParameterError("epsilon must be nonnegative")


@dataclass
class StabilityBounds:
    affine_constant: float  # 6 M R0 / r0 + 2
    affine_bound: float  # affine_constant * epsilon
    jensen_bound: float | None  # (4 + R0 / delta) * epsilon
    jensen_constant_bound: float  # J <= 2 A
    budget: StabilityBudget

    def to_dict(self):
        return {
            "affine_constant": self.affine_constant,
            "affine_bound": self.affine_bound,
            "jensen_bound": self.jensen_bound,
            "jensen_constant_bound": self.jensen_constant_bound,
            "r0": self.budget.r0, "R0": self.budget.R0, "M": self.budget.M,
            "delta": self.budget.delta, "epsilon": self.budget.epsilon,
        }


def stability_bound_report(budget: StabilityBudget, jensen: bool = False) -> StabilityBounds:
    """Affine bound ``(6 M R0/r0 + 2) eps``, Jensen bound ``(4 + R0/delta) eps``, ``J <= 2A``.

    ``jensen=True`` requires ``budget.delta``.
    """
    if jensen and budget.delta is None:
        raise ParameterError("the Jensen bound needs delta")
    A = 6.0 * budget.M * budget.R0 / budget.r0 + 2.0
    J = None if budget.delta is None else (4.0 + budget.R0 / budget.delta) * budget.epsilon
    return StabilityBounds(A, A * budget.epsilon, J, 2.0 * A, budget)


# -- recovery experiment -----------------------------------------------------------


@dataclass
class RecoveryReport:
    coefficients: np.ndarray  # (a_1, ..., a_dim, b)
    epsilon: float
    r0: float
    R0: float
    M: float
    per_line_max_error: float
    per_line_max_fit_error: float
    measured_Q: float
    measured_d: float
    theoretical_bound: float
    optimal_d: float
    holds: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "epsilon": self.epsilon, "r0": self.r0, "R0": self.R0, "M": self.M,
            "per_line_max_error": self.per_line_max_error,
            "per_line_max_fit_error": self.per_line_max_fit_error,
            "measured_Q": self.measured_Q, "measured_d": self.measured_d,
            "theoretical_bound": self.theoretical_bound,
            "optimal_d": self.optimal_d, "holds": self.holds,
            "coefficients": [float(v) for v in self.coefficients],
            "meta": self.meta,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def affine_recovery_experiment(sf: SampledFunction, M_assumed: float = 200.0, norm: str = "sup",
                               t_power: int | None = None, backend=None) -> RecoveryReport:
    """Measure ``eps``, lift, fit one linear map to the lift, add back the best constant.

    The Chebyshev linear fit over every sampled ray point stands in for the
    K-space functional; the result is compared with the stability bound
    under the assumed constant ``M_assumed`` and with the optimal affine
    distance from a direct LP.
    """
    dom = sf.domain
    r0, R0 = body_radii(dom.body_kind, dom.dim, norm)
    tp = dom.denom_power if t_power is None else t_power
    eps = affinity_defect(sf, enumerate_convex_triples(dom, tp, backend=backend)).value
    lift = radial_affine_lift(sf, norm=norm, backend=backend)
    lifted, ok = lift.values_at_numerators(dom.numerators)
    X = np.asarray(dom.coords, dtype=float)
    lin, _ = chebyshev_affine(X[ok], lifted[ok], backend=backend, intercept=False)
    resid = sf.values - X @ lin
    b = 0.5 * (float(resid.max()) + float(resid.min()))
    measured = 0.5 * (float(resid.max()) - float(resid.min()))
    Q = lift_quasilinearity(lift, domain=dom, norm=norm).value
    bounds = stability_bound_report(StabilityBudget(r0, R0, M_assumed, None, eps))
    _, optimal = best_affine_fit(sf, backend=backend)
    return RecoveryReport(
        coefficients=np.append(lin, b),
        epsilon=eps, r0=r0, R0=R0, M=float(M_assumed),
        per_line_max_error=lift.per_line_max_error,
        per_line_max_fit_error=float(lift.fit_error.max()),
        measured_Q=Q, measured_d=measured,
        theoretical_bound=bounds.affine_bound,
        optimal_d=optimal,
        holds=bool(measured <= bounds.affine_bound + 1e-9),
        meta={"t_power": tp, "norm": norm, "n_lines": lift.n_lines, "M_is_assumed": True},
    )
