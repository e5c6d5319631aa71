"""Explicit functions: Ribe and Kalton quasi-linear maps, entropy, the
Cholewa-Kominek function, -log2 of a norm, the F* construction, and growth
tables for each.

Scalar evaluators accept a :class:`SparseVector`, a mapping ``index -> value``
(1-based) or a dense 1-D sequence. ``*_rows`` variants take an ``(N, d)``
array and evaluate row-wise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class SparseVector:
    """Finitely supported sequence; ``indices`` are 1-based and increasing."""

    indices: tuple
    values: tuple

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ParameterError("indices and values differ in length")
        if any(i < 1 for i in self.indices):
            raise ParameterError("indices are 1-based")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ParameterError("indices must be strictly increasing")
        if any(v == 0 for v in self.values):
            raise ParameterError("stored values must be nonzero")

    @classmethod
    def from_dense(cls, x) -> "SparseVector":
        idx, vals = [], []
        for i, v in enumerate(x, start=1):
            if v != 0:
                idx.append(i)
                vals.append(v)
        return cls(tuple(idx), tuple(vals))

    @classmethod
    def from_mapping(cls, m) -> "SparseVector":
        items = sorted((int(i), v) for i, v in m.items() if v != 0)
        return cls(tuple(i for i, _ in items), tuple(v for _, v in items))

    def to_dense(self, dim=None) -> list:
        dim = dim if dim is not None else (self.indices[-1] if self.indices else 0)
        out = [0] * dim
        for i, v in zip(self.indices, self.values):
            out[i - 1] = v
        return out

    def __len__(self):
        return len(self.indices)


def _dense(x) -> list:
    """Dense coordinate list (1-based positions become list positions)."""
    if isinstance(x, SparseVector):
        return x.to_dense()
    if isinstance(x, dict):
        return SparseVector.from_mapping(x).to_dense()
    if isinstance(x, np.ndarray):
        return x.reshape(-1).tolist()
    return list(x)


def _floats(x) -> np.ndarray:
    return np.asarray([float(v) for v in _dense(x)], dtype=float)


# -- quasi-linear maps -------------------------------------------------------


def _ribe_terms(v):
    v = v[v != 0]
    if len(v) == 0:
        return 0.0
    s = float(v.sum())
    if s != 0:
        # sum x log|x| - s log|s| == sum x log|x/s| since sum x = s; this form
        # commutes exactly with scaling by powers of two
        return float(np.sum(v * np.log2(np.abs(v / s))))
    ref = float(np.abs(v).max())
    return float(np.sum(v * np.log2(np.abs(v / ref))))


def ribe(x) -> float:
    """``R(x) = sum x_i log2|x_i| - (sum x_i) log2|sum x_i|`` with ``0 log 0 = 0``."""
    return _ribe_terms(_floats(x))


def ribe_rows(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.array([_ribe_terms(row) for row in X])


_LOG2_CACHE = np.zeros(0)


def _log2_ranks(n):
    global _LOG2_CACHE
    if len(_LOG2_CACHE) < n:
        _LOG2_CACHE = np.log2(np.arange(1, max(n, 2 * len(_LOG2_CACHE)) + 1, dtype=float))
    return _LOG2_CACHE[:n]


def _kalton_nonneg(v):
    v = np.sort(v[v > 0])[::-1]
    return float(np.sum(v * _log2_ranks(len(v)))) if len(v) else 0.0


def kalton_map(x) -> float:
    """``K(x) = sum_i x~_i log2 i`` on ``x >= 0``, ``K(x) = K(x+) - K(x-)`` in general.

    ``x~`` is the decreasing rearrangement. The base-2 logarithm rescales the
    map only.
    """
    v = _floats(x)
    return _kalton_nonneg(np.maximum(v, 0.0)) - _kalton_nonneg(np.maximum(-v, 0.0))


def kalton_rows(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.array([kalton_map(row) for row in X])


# -- functions on the simplex and the positive cone ----------------------------


def entropy_simplex(x) -> float:
    """``-sum x_i log2 x_i``."""
    v = _floats(x)
    v = v[v > 0]
    return float(-np.sum(v * np.log2(v)))


def entropy_rows(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(X > 0, X * np.log2(np.where(X > 0, X, 1.0)), 0.0)
    return -t.sum(axis=1)


def cholewa_kominek_omega(x) -> int:
    """``min {n >= 0 : max_i x_i >= 2**-n}`` for nonnegative ``x != 0`` (exact)."""
    vals = _dense(x)
    if any(v < 0 for v in vals):
        raise DomainError("omega is defined on nonnegative vectors")
    m = max(vals, default=0)
    if m == 0:
        raise DomainError("omega is undefined at 0")
    m = Fraction(m) if not isinstance(m, float) else Fraction(m)
    n = 0
    scaled = m
    while scaled < 1:
        scaled *= 2
        n += 1
    return n


def omega_rows(X) -> np.ndarray:
    """Vectorised omega: with ``m = f 2**e``, ``f in [1/2, 1)``, the answer is ``max(0, 1 - e)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if np.any(X < 0):
        raise DomainError("omega is defined on nonnegative vectors")
    m = X.max(axis=1) if X.shape[1] else np.zeros(len(X))
    if np.any(m == 0):
        raise DomainError("omega is undefined at 0")
    _, e = np.frexp(m)
    return np.maximum(0, 1 - e).astype(float)


NORMS = ("sup", "l1", "l2")


def _norm(v, kind):
    if kind == "sup":
        return float(np.abs(v).max()) if len(v) else 0.0
    if kind == "l1":
        return float(np.abs(v).sum())
    if kind == "l2":
        return float(np.sqrt((v * v).sum()))
    raise ParameterError(f"unknown norm {kind!r}; expected one of {NORMS}")


def neg_log_norm(x, norm_kind="sup") -> float:
    """``-log2 ||x||``; undefined at 0."""
    nv = _norm(_floats(x), norm_kind)
    if nv == 0:
        raise DomainError("-log2||x|| is undefined at 0")
    return -math.log2(nv)


def neg_log_norm_rows(X, norm_kind="sup") -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if norm_kind == "sup":
        nv = np.abs(X).max(axis=1)
    elif norm_kind == "l1":
        nv = np.abs(X).sum(axis=1)
    elif norm_kind == "l2":
        nv = np.sqrt((X * X).sum(axis=1))
    else:
        raise ParameterError(f"unknown norm {norm_kind!r}; expected one of {NORMS}")
    if np.any(nv == 0):
        raise DomainError("-log2||x|| is undefined at 0")
    return -np.log2(nv)


def simplex_max_counterexample(x) -> float:
    """``-log2 max_i x_i`` on the simplex."""
    v = _floats(x)
    m = float(v.max()) if len(v) else 0.0
    if m <= 0:
        raise DomainError("max coordinate must be positive")
    return -math.log2(m)


def simplex_max_rows(X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = X.max(axis=1)
    if np.any(m <= 0):
        raise DomainError("max coordinate must be positive")
    return -np.log2(m)


# -- F* ----------------------------------------------------------------------


def dyadic_theta(n: int) -> Fraction:
    """``theta_n = 1 - 2**-n``."""
    return 1 - Fraction(1, 1 << n)


THETA_PRESETS = {"dyadic": dyadic_theta}


@dataclass(frozen=True)
class FStarConfig:
    """``variant='nested'`` uses prefixes ``{1..n}``; ``'blocks'`` uses
    consecutive disjoint blocks, block ``n`` of size ``block_sizes[n-1]``
    (default ``n``). Block or prefix ``n`` is paired with ``theta_n``."""

    variant: str = "blocks"
    theta: str | Callable = "dyadic"
    block_sizes: tuple | None = None

    def __post_init__(self):
        if self.variant not in ("nested", "blocks"):
            raise ParameterError(f"variant must be 'nested' or 'blocks', got {self.variant!r}")
        if isinstance(self.theta, str) and self.theta not in THETA_PRESETS:
            raise ParameterError(f"unknown theta preset {self.theta!r}")
        if self.block_sizes is not None and any(int(b) < 1 for b in self.block_sizes):
            raise ParameterError("block sizes must be positive")

    def theta_at(self, n: int) -> Fraction:
        rule = THETA_PRESETS[self.theta] if isinstance(self.theta, str) else self.theta
        t = Fraction(rule(n))
        if not (0 < t < 1):
            raise ParameterError(f"theta_{n} = {t} is not in (0, 1)")
        return t

    def block_size(self, n: int) -> int:
        if self.block_sizes is None:
            return n
        if n > len(self.block_sizes):
            raise ParameterError(f"no size given for block {n}")
        return int(self.block_sizes[n - 1])

    def coords(self, n: int) -> range:
        """0-based coordinate positions of prefix/block ``n``."""
        if self.variant == "nested":
            return range(n)
        start = sum(self.block_size(j) for j in range(1, n))
        return range(start, start + self.block_size(n))

    def default_n_max(self, support_end: int) -> int:
        """Smallest ``n`` whose prefix/block reaches coordinate ``support_end`` (1-based)."""
        if support_end <= 0:
            return 0
        if self.variant == "nested":
            return support_end
        n, end = 0, 0
        while end < support_end:
            n += 1
            end += self.block_size(n)
        return n


def _log2_fraction(q: Fraction) -> float:
    """log2 of a positive rational; exact for powers of two."""
    num, den = q.numerator, q.denominator
    if num & (num - 1) == 0 and den & (den - 1) == 0:
        return float(num.bit_length() - den.bit_length())
    return math.log2(num) - math.log2(den)


def _exact_coords(x) -> list:
    out = []
    for v in _dense(x):
        out.append(v if isinstance(v, Fraction) else Fraction(v))
    return out


def f_n(x, n: int, cfg: FStarConfig) -> float:
    """``F_n(x) = -log2 (1 - theta_n min_{k in block n} x_k)``; coordinates beyond ``x`` are 0."""
    v = _exact_coords(x)
    th = cfg.theta_at(n)
    vals = [v[k] if k < len(v) else Fraction(0) for k in cfg.coords(n)]
    lo = min(vals)
    if lo < 0 or max(vals) > 1:
        raise DomainError("F* is defined on [0, 1] coordinates")
    return -_log2_fraction(1 - th * lo) + 0.0


def f_star(x, cfg: FStarConfig | None = None, n_max: int | None = None) -> float:
    """``max(0, max_{n <= n_max} F_n(x))`` evaluated in exact arithmetic.

    The default ``n_max`` is the last prefix/block meeting the support of
    ``x``, beyond which every ``F_n`` vanishes.
    """
    cfg = cfg or FStarConfig()
    v = _exact_coords(x)
    if any(c < 0 or c > 1 for c in v):
        raise DomainError("F* is defined on [0, 1] coordinates")
    last = max((i + 1 for i, c in enumerate(v) if c != 0), default=0)
    if n_max is None:
        n_max = cfg.default_n_max(last)
    best = 0.0
    for n in range(1, n_max + 1):
        best = max(best, f_n(v, n, cfg))
    return best


def f_star_rows(X, cfg: FStarConfig | None = None, n_max: int | None = None) -> np.ndarray:
    """Float evaluation over rows of a positive-section array."""
    cfg = cfg or FStarConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if np.any(X < 0) or np.any(X > 1):
        raise DomainError("F* is defined on [0, 1] coordinates")
    d = X.shape[1]
    if n_max is None:
        n_max = cfg.default_n_max(d)
    out = np.zeros(len(X))
    for n in range(1, n_max + 1):
        idx = [k for k in cfg.coords(n)]
        inside = [k for k in idx if k < d]
        if len(inside) < len(idx):
            continue  # a coordinate outside the array is 0, so F_n = 0
        lo = X[:, inside].min(axis=1)
        th = float(cfg.theta_at(n))
        out = np.maximum(out, -np.log2(1.0 - th * lo))
    return out + 0.0


def nested_point(i: int, n: int) -> list:
    """``p_i = S_n - e_i`` with ``S_n = sum_{j <= n} e_j``."""
    return [Fraction(0) if j == i else Fraction(1) for j in range(1, n + 1)]


def block_point(cfg: FStarConfig, block: int, i: int) -> list:
    """``q_i = 1_I - e_i`` for the ``i``-th coordinate (1-based) of block ``I``."""
    pos = list(cfg.coords(block))
    x = [Fraction(0)] * (pos[-1] + 1)
    for k in pos:
        x[k] = Fraction(1)
    x[pos[i - 1]] = Fraction(0)
    return x


def block_average(cfg: FStarConfig, block: int) -> list:
    """Average of the ``q_i`` over block ``I``: ``((m-1)/m) 1_I``."""
    pos = list(cfg.coords(block))
    m = len(pos)
    x = [Fraction(0)] * (pos[-1] + 1)
    for k in pos:
        x[k] = Fraction(m - 1, m)
    return x


def block_average_value(m: int) -> float:
    """``-log2(1/m + 2**-m (m-1)/m)``, the F* value at a block average with dyadic theta."""
    return -_log2_fraction(Fraction(1, m) + Fraction(m - 1, m * (1 << m)))


# -- growth tables -------------------------------------------------------------

FAMILIES = ("omega", "entropy", "simplex_max", "f_star", "f_star_nested")
GROWTH_COLUMNS = ("n", "flat_value", "extreme_max", "lower_bound_formula")


@dataclass
class GrowthTable:
    family: str
    rows: list  # tuples in GROWTH_COLUMNS order
    meta: dict = field(default_factory=dict)
    columns: tuple = GROWTH_COLUMNS


def _growth_row(family, n):
    if family == "omega":
        size = 1 << n
        flat = cholewa_kominek_omega([Fraction(1, size)] * size)
        ext = max(cholewa_kominek_omega([0] * (i - 1) + [1]) for i in range(1, size + 1))
        return (n, float(flat), float(ext), float(n))
    if family == "entropy":
        size = 1 << n
        flat = entropy_simplex([1.0 / size] * size)
        ext = max(entropy_simplex([0.0] * (i - 1) + [1.0]) for i in range(1, size + 1))
        return (n, flat, ext, float(n))
    if family == "simplex_max":
        flat = simplex_max_counterexample([1.0 / n] * n)
        ext = max(simplex_max_counterexample([0.0] * (i - 1) + [1.0]) for i in range(1, n + 1))
        return (n, flat, ext, math.log2(n))
    if family == "f_star":
        cfg = FStarConfig("blocks")
        m = cfg.block_size(n)
        flat = f_star(block_average(cfg, n), cfg)
        ext = max(f_star(block_point(cfg, n, i), cfg) for i in range(1, m + 1))
        return (n, flat, ext, math.log2(m) - 1.0)
    if family == "f_star_nested":
        cfg = FStarConfig("nested")
        pts = [nested_point(i, n) for i in range(1, n + 1)]
        avg = [sum(col) / n for col in zip(*pts)]
        flat = f_star(avg, cfg)
        ext = max(f_star(p, cfg) for p in pts)
        bound = -_log2_fraction(1 - cfg.theta_at(n) * Fraction(n - 1, n)) + 0.0
        return (n, flat, ext, bound)
    raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")


_GROWTH_META = {
    "omega": {"flat_point": "2^-n sum_{i<=2^n} e_i", "extreme_points": "e_i",
              "lower_bound_formula": "n"},
    "entropy": {"flat_point": "uniform on 2^n coordinates", "extreme_points": "vertices",
                "lower_bound_formula": "n"},
    "simplex_max": {"flat_point": "uniform on n coordinates", "extreme_points": "vertices",
                    "lower_bound_formula": "log2 n"},
    "f_star": {"variant": "blocks", "theta": "1 - 2^-n", "block_sizes": "n",
               "flat_point": "((m-1)/m) 1_I for block n", "extreme_points": "q_i = 1_I - e_i",
               "lower_bound_formula": "log2 m - 1"},
    "f_star_nested": {"variant": "nested", "theta": "1 - 2^-n",
                      "flat_point": "average of p_i = S_n - e_i", "extreme_points": "p_i",
                      "lower_bound_formula": "-log2(1 - theta_n (n-1)/n)",
                      "note": "extreme values are i-1 at p_i, not 0"},
}


def growth_report(family: str, n_range: Sequence[int]) -> GrowthTable:
    """Rows ``(n, value at the flat point, max over extreme points, formula)``."""
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}; expected one of {FAMILIES}")
    rows = [_growth_row(family, int(n)) for n in n_range]
    meta = dict(_GROWTH_META[family])
    meta["log_base"] = 2
    return GrowthTable(family, rows, meta)
