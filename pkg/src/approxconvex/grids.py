"""Dyadic grids on convex bodies and their grid-closed convex combinations.

Every point is stored by integer numerators over ``2**denom_power``; all
membership decisions are integer arithmetic.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterator

import numpy as np

from . import config, kernels
from .errors import DomainError, EvaluationError, ParameterError, SizeLimitError

BODY_KINDS = ("simplex", "cube", "ball_sup", "ball_euclid", "positive_cone_section")

# elements per kernel chunk (rows * n_points * (2**j + 1))
_CHUNK_ELEMENTS = 1 << 22


def _in_body(body_kind, nums, k):
    full = 1 << k
    if body_kind == "simplex":
        return np.all(nums >= 0, axis=1) & (nums.sum(axis=1) == full)
    if body_kind in ("cube", "ball_sup"):
        return np.all(np.abs(nums) <= full, axis=1)
    if body_kind == "ball_euclid":
        return (nums.astype(object) ** 2).sum(axis=1) <= full * full
    if body_kind == "positive_cone_section":
        return np.all((nums >= 0) & (nums <= full), axis=1)
    raise ParameterError(f"unknown body kind {body_kind!r}")


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Finite dyadic grid inside a named convex body.

    ``numerators[i]`` holds the coordinates of point ``i`` times
    ``2**denom_power``. Points are sorted lexicographically and unique.
    """

    body_kind: str
    dim: int
    denom_power: int
    numerators: np.ndarray

    def __post_init__(self):
        nums = np.ascontiguousarray(self.numerators, dtype=np.int64).reshape(-1, self.dim)
        nums.setflags(write=False)
        object.__setattr__(self, "numerators", nums)

    def __len__(self):
        return self.numerators.shape[0]

    @property
    def n_points(self):
        return self.numerators.shape[0]

    @property
    def scale(self):
        return 1 << self.denom_power

    @cached_property
    def coords(self) -> np.ndarray:
        c = self.numerators / float(self.scale)
        c.setflags(write=False)
        return c

    @cached_property
    def index(self) -> dict:
        return {tuple(int(v) for v in row): i for i, row in enumerate(self.numerators)}

    def point(self, i) -> tuple:
        """Exact coordinates of point ``i`` as Fractions."""
        return tuple(Fraction(int(v), self.scale) for v in self.numerators[i])

    def find(self, numerators) -> int | None:
        return self.index.get(tuple(int(v) for v in numerators))

    def same_as(self, other) -> bool:
        return self is other or (
            isinstance(other, GridDomain)
            and self.body_kind == other.body_kind
            and self.dim == other.dim
            and self.denom_power == other.denom_power
            and np.array_equal(self.numerators, other.numerators)
        )

    @cached_property
    def _key_data(self):
        # mixed-radix key; with sorted points the key order equals the point order
        offset = self.scale
        radix = 2 * self.scale + 1
        if self.dim * math.log2(radix) >= 62:
            raise ParameterError(
                f"grid key overflow: dim={self.dim}, denom_power={self.denom_power}")
        pows = np.array([radix ** (self.dim - 1 - c) for c in range(self.dim)], dtype=np.int64)
        keys = ((self.numerators + offset) * pows).sum(axis=1)
        order = np.argsort(keys, kind="stable")
        return keys[order], order.astype(np.int64), pows, offset

    @cached_property
    def affine_dim(self) -> int:
        if self.n_points <= 1:
            return 0
        diffs = self.coords[1:] - self.coords[0]
        return int(np.linalg.matrix_rank(diffs))

    def affine_coords(self) -> np.ndarray:
        """Coordinates in an affine chart of full rank (simplex drops its last axis)."""
        if self.body_kind == "simplex":
            return self.coords[:, :-1]
        return self.coords

    def without_origin(self) -> "GridDomain":
        keep = np.any(self.numerators != 0, axis=1)
        return GridDomain(self.body_kind, self.dim, self.denom_power, self.numerators[keep])

    def to_json(self) -> str:
        return json.dumps({
            "body_kind": self.body_kind,
            "dim": self.dim,
            "denom_power": self.denom_power,
            "points": self.numerators.tolist(),
        })

    @classmethod
    def from_json(cls, text) -> "GridDomain":
        data = json.loads(text) if isinstance(text, str) else text
        kind, dim, k = data["body_kind"], int(data["dim"]), int(data["denom_power"])
        if kind not in BODY_KINDS:
            raise ParameterError(f"unknown body kind {kind!r}")
        nums = np.array(data["points"], dtype=np.int64).reshape(-1, dim)
        if not np.all(_in_body(kind, nums, k)):
            raise ParameterError("point outside the named body")
        return _finish(kind, dim, k, nums)


def _finish(kind, dim, k, nums) -> GridDomain:
    nums = np.unique(np.asarray(nums, dtype=np.int64).reshape(-1, dim), axis=0)
    if nums.shape[0] > config.max_points():
        raise SizeLimitError("grid points", nums.shape[0], config.max_points())
    return GridDomain(kind, dim, k, nums)


def _check_count(count):
    cap = config.max_points()
    if count > cap:
        raise SizeLimitError("grid points", count, cap)


def _check_args(dim, k):
    if dim < 1:
        raise ParameterError("dimension must be >= 1")
    if k < 0:
        raise ParameterError("denom_power must be >= 0")


def make_simplex_grid(n_coords: int, denom_power: int) -> GridDomain:
    """All points of the standard simplex in R^n_coords with coordinates m/2^k."""
    _check_args(n_coords, denom_power)
    total = 1 << denom_power
    _check_count(math.comb(total + n_coords - 1, n_coords - 1))
    rows = []
    for bars in itertools.combinations(range(total + n_coords - 1), n_coords - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(total + n_coords - 2 - prev)
        rows.append(parts)
    return _finish("simplex", n_coords, denom_power, np.array(rows, dtype=np.int64))


def _box(dim, lo, hi):
    axes = [np.arange(lo, hi + 1, dtype=np.int64)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def make_cube_grid(dim: int, denom_power: int) -> GridDomain:
    _check_args(dim, denom_power)
    full = 1 << denom_power
    _check_count((2 * full + 1) ** dim)
    return _finish("cube", dim, denom_power, _box(dim, -full, full))


def make_ball_grid(dim: int, denom_power: int, norm_kind: str = "sup") -> GridDomain:
    """Cube-grid points filtered by ``norm <= 1`` (``norm_kind`` 'sup' or 'euclid')."""
    _check_args(dim, denom_power)
    full = 1 << denom_power
    _check_count((2 * full + 1) ** dim)
    nums = _box(dim, -full, full)
    if norm_kind in ("sup", "ball_sup"):
        kind = "ball_sup"
    elif norm_kind in ("euclid", "l2", "ball_euclid"):
        kind = "ball_euclid"
    else:
        raise ParameterError(f"unknown norm kind {norm_kind!r}")
    return _finish(kind, dim, denom_power, nums[_in_body(kind, nums, denom_power)])


def make_positive_section_grid(dim: int, denom_power: int) -> GridDomain:
    _check_args(dim, denom_power)
    full = 1 << denom_power
    _check_count((full + 1) ** dim)
    return _finish("positive_cone_section", dim, denom_power, _box(dim, 0, full))


def make_grid(body_kind: str, dim: int, denom_power: int) -> GridDomain:
    if body_kind == "simplex":
        return make_simplex_grid(dim, denom_power)
    if body_kind == "cube":
        return make_cube_grid(dim, denom_power)
    if body_kind == "ball_sup":
        return make_ball_grid(dim, denom_power, "sup")
    if body_kind == "ball_euclid":
        return make_ball_grid(dim, denom_power, "euclid")
    if body_kind == "positive_cone_section":
        return make_positive_section_grid(dim, denom_power)
    raise ParameterError(f"unknown body kind {body_kind!r}; expected one of {BODY_KINDS}")


@dataclass(frozen=True)
class ConvexTriple:
    x_id: int
    y_id: int
    t: Fraction
    combo_id: int


@dataclass(frozen=True, eq=False)
class TripleSet:
    """Grid-closed triples ``(x, y, t = a/2**t_power) -> combo``, column-stored."""

    domain: GridDomain
    t_power: int
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    combo: np.ndarray

    def __len__(self):
        return len(self.x)

    @property
    def t(self) -> np.ndarray:
        return self.a / float(1 << self.t_power)

    def __getitem__(self, i) -> ConvexTriple:
        return ConvexTriple(int(self.x[i]), int(self.y[i]),
                            Fraction(int(self.a[i]), 1 << self.t_power), int(self.combo[i]))

    def __iter__(self) -> Iterator[ConvexTriple]:
        for i in range(len(self)):
            yield self[i]

    def select(self, mask) -> "TripleSet":
        return TripleSet(self.domain, self.t_power, self.x[mask], self.y[mask],
                         self.a[mask], self.combo[mask])


@dataclass(frozen=True, eq=False)
class MidpointSet:
    domain: GridDomain
    x: np.ndarray
    y: np.ndarray
    mid: np.ndarray

    def __len__(self):
        return len(self.x)

    def __iter__(self):
        for i in range(len(self)):
            yield int(self.x[i]), int(self.y[i]), int(self.mid[i])


def enumerate_convex_triples(domain: GridDomain, t_power: int, backend=None) -> TripleSet:
    """All ``(x, y, a/2**t_power)`` whose combination lands exactly on a grid point.

    Ordered lexicographically by ``(x_id, y_id, a)``.
    """
    if t_power < 0:
        raise ParameterError("t_power must be >= 0")
    n = domain.n_points
    keys, key_ids, pows, offset = domain._key_data
    per_row = n * ((1 << t_power) + 1)
    rows_per_chunk = max(1, _CHUNK_ELEMENTS // max(per_row, 1))
    cap = config.max_triples()
    parts = []
    count = 0
    for start in range(0, n, rows_per_chunk):
        stop = min(n, start + rows_per_chunk)
        chunk = kernels.convex_triples(domain.numerators, keys, key_ids, pows,
                                       int(offset), int(t_power), start, stop,
                                       backend=backend)
        count += len(chunk[0])
        if count > cap:
            raise SizeLimitError("convex triples", count, cap)
        parts.append(chunk)
    if parts:
        cols = [np.concatenate([p[i] for p in parts]) for i in range(4)]
    else:
        cols = [np.zeros(0, dtype=np.int64) for _ in range(4)]
    return TripleSet(domain, t_power, *cols)


def enumerate_midpoint_pairs(domain: GridDomain, backend=None) -> MidpointSet:
    """Ordered pairs ``(x, y)`` whose midpoint is a grid point."""
    triples = enumerate_convex_triples(domain, 1, backend=backend)
    half = triples.a == 1
    return MidpointSet(domain, triples.x[half], triples.y[half], triples.combo[half])


@dataclass(frozen=True, eq=False)
class SampledFunction:
    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if len(v) != self.domain.n_points:
            raise ParameterError(
                f"{len(v)} values for a domain of {self.domain.n_points} points")
        if not np.all(np.isfinite(v)):
            raise EvaluationError("non-finite sample value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.domain, values)

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            if not self.domain.same_as(other.domain):
                raise DomainError("functions live on different domains")
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __mul__(self, scalar):
        return self.with_values(self.values * float(scalar))

    __rmul__ = __mul__


def sample_function(domain: GridDomain, evaluator: Callable, vectorized=False) -> SampledFunction:
    """Evaluate ``evaluator`` at every grid point (float coordinates).

    With ``vectorized=True`` the evaluator receives the full ``(n, dim)``
    coordinate array and must return ``n`` values.
    """
    if vectorized:
        values = np.asarray(evaluator(domain.coords), dtype=float)
    else:
        values = np.empty(domain.n_points)
        for i, row in enumerate(domain.coords):
            try:
                values[i] = float(evaluator(row))
            except (ValueError, ZeroDivisionError, DomainError) as exc:
                raise EvaluationError(f"evaluator failed at point {domain.point(i)}: {exc}") from exc
    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad):
        i = int(bad[0])
        raise EvaluationError(
            f"non-finite value {values[i]} at point {tuple(str(c) for c in domain.point(i))}")
    return SampledFunction(domain, values)
