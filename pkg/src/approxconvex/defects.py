"""Convexity, affinity, Jensen and quasi-additivity defects over explicit test sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainMismatchError, EvaluationError, ParameterError
from .grids import MidpointSet, SampledFunction, TripleSet


@dataclass
class DefectReport:
    kind: str
    value: float
    witness: dict | None
    test_set_size: int
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        d = {"kind": self.kind, "value": self.value, "witness": self.witness,
             "test_set_size": self.test_set_size}
        if self.seed is not None:
            d["seed"] = self.seed
        if self.meta:
            d["meta"] = self.meta
        return d


def norm_function(kind) -> Callable:
    """Row-wise norm for ``kind`` in {'l1', 'sup', 'l2'}; callables pass through."""
    if callable(kind):
        return kind
    if kind in ("l1", "ell1"):
        return lambda v: np.abs(v).sum(axis=-1)
    if kind in ("sup", "linf", "max"):
        return lambda v: np.abs(v).max(axis=-1) if v.shape[-1] else np.zeros(v.shape[:-1])
    if kind in ("l2", "euclid"):
        return lambda v: np.sqrt((v * v).sum(axis=-1))
    raise ParameterError(f"unknown norm {kind!r}")


def convex_gap(fx, fy, fc, t):
    """``f(tx+(1-t)y) - t f(x) - (1-t) f(y)``; scalar and array paths share this."""
    return fc - (t * fx + (1.0 - t) * fy)


def _check(sf, test_set):
    if not test_set.domain.same_as(sf.domain):
        raise DomainMismatchError("test set was built on a different domain")


def _triple_witness(sf, triples, i):
    d = sf.domain
    tr = triples[i]
    return {
        "x": tr.x_id, "y": tr.y_id, "t": str(tr.t), "combo": tr.combo_id,
        "x_point": [str(c) for c in d.point(tr.x_id)],
        "y_point": [str(c) for c in d.point(tr.y_id)],
    }


def _triple_gaps(sf, triples):
    v = sf.values
    return convex_gap(v[triples.x], v[triples.y], v[triples.combo], triples.t)


def _report_from(kind, scores, witness_fn, size, clip_zero):
    if size == 0:
        return DefectReport(kind, 0.0, None, 0)
    i = int(np.argmax(scores))  # first occurrence on ties
    raw = float(scores[i])
    if clip_zero and raw < 0:
        return DefectReport(kind, 0.0, None, size)
    return DefectReport(kind, raw, witness_fn(i), size)


def convexity_defect(sf: SampledFunction, triples: TripleSet) -> DefectReport:
    """``max(0, sup f(combo) - t f(x) - (1-t) f(y))`` over the triples."""
    _check(sf, triples)
    gaps = _triple_gaps(sf, triples)
    return _report_from("convex", gaps, lambda i: _triple_witness(sf, triples, i),
                        len(triples), True)


def affinity_defect(sf: SampledFunction, triples: TripleSet) -> DefectReport:
    _check(sf, triples)
    gaps = np.abs(_triple_gaps(sf, triples))
    return _report_from("affine", gaps, lambda i: _triple_witness(sf, triples, i),
                        len(triples), False)


def jensen_defect(sf: SampledFunction, pairs: MidpointSet) -> DefectReport:
    _check(sf, pairs)
    v = sf.values
    gaps = np.abs(convex_gap(v[pairs.x], v[pairs.y], v[pairs.mid], 0.5))

    def witness(i):
        return {"x": int(pairs.x[i]), "y": int(pairs.y[i]), "mid": int(pairs.mid[i])}

    return _report_from("jensen", gaps, witness, len(pairs), False)


def witness_value(sf: SampledFunction, report: DefectReport) -> float:
    """Re-evaluate the defect expression at the report's witness."""
    w = report.witness
    if w is None:
        return 0.0
    v = sf.values
    if report.kind == "jensen":
        return abs(float(convex_gap(v[w["x"]], v[w["y"]], v[w["mid"]], 0.5)))
    from fractions import Fraction
    t = float(Fraction(w["t"]))
    g = float(convex_gap(v[w["x"]], v[w["y"]], v[w["combo"]], t))
    return abs(g) if report.kind == "affine" else g


def _apply(f, X, vectorized):
    if vectorized:
        out = np.asarray(f(X), dtype=float)
    else:
        out = np.array([float(f(row)) for row in X])
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise EvaluationError(f"non-finite evaluation at {X[bad].tolist()}")
    return out


def random_sparse_pairs(n_pairs: int, seed: int, dim: int = 8, max_support: int = 4,
                        nonnegative=False, dyadic_bits: int | None = None):
    """Seeded pairs of finitely supported vectors, stored densely in ``dim`` columns.

    Each vector has a random support of size 1..max_support. With
    ``dyadic_bits`` the entries are multiples of ``2**-dyadic_bits`` in (0, 1].
    """
    rng = np.random.default_rng(seed)

    def draw():
        V = np.zeros((n_pairs, dim))
        sizes = rng.integers(1, max_support + 1, size=n_pairs)
        for r in range(n_pairs):
            idx = rng.choice(dim, size=sizes[r], replace=False)
            if dyadic_bits is not None:
                vals = rng.integers(1, (1 << dyadic_bits) + 1, size=sizes[r]) / float(1 << dyadic_bits)
            else:
                vals = rng.uniform(0.01, 1.0, size=sizes[r])
            if not nonnegative:
                vals = vals * rng.choice([-1.0, 1.0], size=sizes[r])
            V[r, idx] = vals
        return V

    return draw(), draw()


def quasi_additivity_constant(f: Callable, pairs, norm="l1", vectorized=True,
                              seed: int | None = None) -> DefectReport:
    """``sup |f(x+y) - f(x) - f(y)| / (|x| + |y|)`` over the sampled pairs.

    ``pairs`` is ``(X, Y)`` with one vector per row. Pairs with
    ``|x| + |y| = 0`` are skipped.
    """
    X, Y = (np.atleast_2d(np.asarray(p, dtype=float)) for p in pairs)
    if X.shape != Y.shape:
        raise ParameterError("pair arrays must have equal shapes")
    nf = norm_function(norm)
    denom = nf(X) + nf(Y)
    keep = denom > 0
    X, Y, denom = X[keep], Y[keep], denom[keep]
    if len(X) == 0:
        return DefectReport("quasi_additive", 0.0, None, 0, seed)
    fx, fy, fs = _apply(f, X, vectorized), _apply(f, Y, vectorized), _apply(f, X + Y, vectorized)
    ratio = np.abs(fs - fx - fy) / denom
    i = int(np.argmax(ratio))
    witness = {"x": X[i].tolist(), "y": Y[i].tolist()}
    return DefectReport("quasi_additive", float(ratio[i]), witness, len(X), seed)


def sampled_convexity_defect(f: Callable, X, Y, t, vectorized=True,
                             seed: int | None = None) -> DefectReport:
    """Convexity defect of ``f`` over ambient samples ``(x_i, y_i, t_i)``."""
    X, Y = np.atleast_2d(np.asarray(X, dtype=float)), np.atleast_2d(np.asarray(Y, dtype=float))
    t = np.asarray(t, dtype=float)
    Z = t[:, None] * X + (1.0 - t)[:, None] * Y
    gaps = convex_gap(_apply(f, X, vectorized), _apply(f, Y, vectorized),
                      _apply(f, Z, vectorized), t)
    rep = _report_from("convex", gaps,
                       lambda i: {"x": X[i].tolist(), "y": Y[i].tolist(), "t": float(t[i])},
                       len(t), True)
    rep.seed = seed
    return rep


@dataclass
class ChainReport:
    lhs: float
    rhs: float
    holds: bool
    n_terms: int


def chain_inequality_check(f: Callable, x_list: Sequence, Q: float, gauge: Callable) -> ChainReport:
    """Check ``|f(sum x_i) - sum f(x_i)| <= Q * sum_i i * gauge(x_i)`` (i from 1)."""
    if len(x_list) == 0:
        return ChainReport(0.0, 0.0, True, 0)
    xs = [np.asarray(x, dtype=float) for x in x_list]
    total = np.sum(xs, axis=0)
    lhs = abs(float(f(total)) - sum(float(f(x)) for x in xs))
    rhs = Q * sum((i + 1) * float(gauge(x)) for i, x in enumerate(xs))
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        raise EvaluationError("non-finite value in chain inequality")
    return ChainReport(lhs, rhs, lhs <= rhs, len(xs))
