"""Compare the compiled and pure-Python kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat N] [--json PATH]

Workloads: triple enumeration (the grid kernel) and simplex pivoting through
grid LPs (convex minorant, Chebyshev fit, direct distance). Results are
checked for agreement between backends before timings are reported.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from approxconvex import kernels
from approxconvex.distances import best_affine_fit, convex_minorant, direct_convex_distance
from approxconvex.grids import (
    SampledFunction, enumerate_convex_triples, make_cube_grid, make_simplex_grid,
)


def _triples(backend):
    dom = make_simplex_grid(4, 3)
    ts = enumerate_convex_triples(dom, 3, backend=backend)
    return len(ts)


def _triples_cube(backend):
    dom = make_cube_grid(2, 3)
    return len(enumerate_convex_triples(dom, 2, backend=backend))


def _minorant(backend):
    dom = make_simplex_grid(3, 3)
    f = SampledFunction(dom, np.random.default_rng(0).normal(size=dom.n_points))
    return float(convex_minorant(f, backend=backend).values.sum())


def _chebyshev(backend):
    dom = make_cube_grid(2, 3)
    X = dom.coords
    f = SampledFunction(dom, X @ [1.0, -2.0] + np.sin(5 * X[:, 0]))
    return best_affine_fit(f, backend=backend)[1]


def _direct(backend):
    dom = make_simplex_grid(3, 3)
    f = SampledFunction(dom, np.random.default_rng(1).normal(size=dom.n_points))
    return direct_convex_distance(f, backend=backend).d


WORKLOADS = {
    "triples simplex(4,k=3)": _triples,
    "triples cube(2,k=3)": _triples_cube,
    "convex minorant simplex(3,k=3)": _minorant,
    "chebyshev fit cube(2,k=3)": _chebyshev,
    "direct distance simplex(3,k=3)": _direct,
}


def _time(fn, backend, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    backends = sorted(kernels.BACKENDS)
    if "compiled" not in backends:
        print("compiled kernels are not built; only the python backend is timed")
    rows = []
    print(f"{'workload':<34}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in WORKLOADS.items():
        times, outs = {}, {}
        for b in backends:
            times[b], outs[b] = _time(fn, b, args.repeat)
        vals = list(outs.values())
        agree = all(np.isclose(v, vals[0], rtol=1e-9, atol=1e-9) for v in vals)
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{name:<34}" + "".join(f"{times[b]:>11.4f}s" for b in backends)
              + f"{speed:>9.1f}x" + ("" if agree else "  MISMATCH"))
        rows.append({"workload": name, "seconds": times, "speedup": speed, "agree": bool(agree)})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
