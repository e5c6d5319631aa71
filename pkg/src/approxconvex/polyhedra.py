"""Exact vertex enumeration by the double description method.

Polyhedra are given as ``{x : A x >= b}`` with rational data and must be
pointed. The homogenised cone ``{(x, s) : A x - b s >= 0, s >= 0}`` is built
one constraint at a time over integer rays; extreme rays with ``s > 0`` are
the vertices. Adjacency is decided combinatorially with bitmask zero sets.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

from .errors import ParameterError, SizeLimitError


def _integer_row(row):
    fr = [Fraction(v) for v in row]
    den = 1
    for v in fr:
        den = lcm(den, v.denominator)
    out = [int(v * den) for v in fr]
    return _primitive(out)


def _primitive(v):
    g = 0
    for a in v:
        g = gcd(g, a)
    if g > 1:
        return tuple(a // g for a in v)
    return tuple(v)


def _dot(a, r):
    return sum(x * y for x, y in zip(a, r) if x)


def _independent_rows(rows, dim):
    """Indices of ``dim`` linearly independent rows (greedy in order), or None."""
    chosen = []
    basis = []  # reduced rows with pivot columns
    for idx, row in enumerate(rows):
        v = [Fraction(x) for x in row]
        for piv, b in basis:
            if v[piv] != 0:
                f = v[piv] / b[piv]
                v = [a - f * c for a, c in zip(v, b)]
        piv = next((j for j, a in enumerate(v) if a != 0), None)
        if piv is None:
            continue
        basis.append((piv, v))
        chosen.append(idx)
        if len(chosen) == dim:
            return chosen
    return None


def _inverse_columns(rows):
    """Integer columns of the inverse of a square rational matrix, made primitive."""
    n = len(rows)
    M = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(rows)]
    for c in range(n):
        p = next(r for r in range(c, n) if M[r][c] != 0)
        M[c], M[p] = M[p], M[c]
        pv = M[c][c]
        M[c] = [v / pv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    inv = [row[n:] for row in M]
    cols = []
    for j in range(n):
        col = [inv[i][j] for i in range(n)]
        den = 1
        for v in col:
            den = lcm(den, v.denominator)
        cols.append(_primitive([int(v * den) for v in col]))
    return cols


def extreme_rays(rows, dim, max_rays=200_000):
    """Extreme rays of the pointed cone ``{y : row.y >= 0 for all rows}``.

    Returns ``(rays, zero_sets)``: integer primitive rays and, per ray, the
    bitmask of rows it makes tight.
    """
    rows = [_integer_row(r) for r in rows]
    if any(len(r) != dim for r in rows):
        raise ParameterError("row length does not match dimension")
    init = _independent_rows(rows, dim)
    if init is None:
        raise ParameterError("cone is not pointed (constraint rows do not span)")
    cols = _inverse_columns([rows[i] for i in init])
    rays = []
    init_mask = 0
    for i in init:
        init_mask |= 1 << i
    for j, i in enumerate(init):
        rays.append((cols[j], init_mask & ~(1 << i)))
    init_set = set(init)
    for k, a in enumerate(rows):
        if k in init_set:
            continue
        pos, neg, zero = [], [], []
        for r, z in rays:
            s = _dot(a, r)
            if s > 0:
                pos.append((r, z, s))
            elif s < 0:
                neg.append((r, z, s))
            else:
                zero.append((r, z | (1 << k)))
        if not neg:
            rays = [(r, z) for r, z, _ in pos] + zero
            continue
        masks = [z for _, z in rays]
        new = []
        for rp, zp, sp in pos:
            for rn, zn, sn in neg:
                common = zp & zn
                if common.bit_count() < dim - 2:
                    continue
                adjacent = True
                for z in masks:
                    if z != zp and z != zn and (z & common) == common:
                        adjacent = False
                        break
                if adjacent:
                    v = _primitive([sp * y - sn * x for x, y in zip(rp, rn)])
                    new.append((v, common | (1 << k)))
        rays = [(r, z) for r, z, _ in pos] + zero + new
        if len(rays) > max_rays:
            raise SizeLimitError("extreme rays", len(rays), max_rays)
    rays.sort()
    return [r for r, _ in rays], [z for _, z in rays]


@dataclass(frozen=True)
class Vertex:
    coords: tuple  # Fractions
    tight: frozenset  # indices of constraints A x >= b holding with equality


def enumerate_vertices(A, b, max_rays=200_000):
    """All vertices of the pointed polyhedron ``{x : A x >= b}``, exactly.

    Vertices are sorted lexicographically by coordinates.
    """
    if len(A) != len(b):
        raise ParameterError("A and b have different lengths")
    if not A:
        raise ParameterError("empty constraint system")
    d = len(A[0])
    rows = [list(a) + [-Fraction(bi)] for a, bi in zip(A, b)]
    rows.append([0] * d + [1])
    rays, zsets = extreme_rays(rows, d + 1, max_rays)
    out = []
    for r, z in zip(rays, zsets):
        s = r[-1]
        if s > 0:
            coords = tuple(Fraction(v, s) for v in r[:-1])
            tight = frozenset(i for i in range(len(A)) if (z >> i) & 1)
            out.append(Vertex(coords, tight))
    out.sort(key=lambda v: v.coords)
    return out
