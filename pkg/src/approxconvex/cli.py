"""Command line interface: ``approxconvex <command> [options]``.

Every command writes its reports into ``--out`` together with
``manifest.json``. The exit status is 0 when every internal check passes,
1 when a check fails (a JSON failure summary goes to stderr) and 2 on
usage or parameter errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import gallery, kernels
from .defects import affinity_defect, convexity_defect, jensen_defect
from .distances import best_affine_fit, best_jensen_fit, direct_convex_distance, distance_to_convex
from .envelope import (
    GAP_COLUMNS, _as_fraction, envelope_gap_report, make_covering_system, parse_p, quasi_norm,
    iterative_preimage, sign_oracle, verify_partition_sum, verify_small_union,
)
from .errors import ApproxConvexError
from .grids import (
    BODY_KINDS, GridDomain, SampledFunction, enumerate_convex_triples, enumerate_midpoint_pairs,
    make_grid, sample_function,
)
from .homogenization import affine_recovery_experiment, radial_jensen_lift, lift_quasilinearity
from .reporting import RunManifest, write_csv, write_dat, write_json

REGISTRY_HELP = {
    "entropy": "-sum x_i log2 x_i",
    "ribe": "sum x_i log2|x_i| - s log2|s|, s = sum x_i",
    "kalton": "sum x~_i log2 i on x+ minus the same on x-",
    "omega": "min{n : max x_i >= 2^-n} (origin excluded)",
    "neglog:sup|l1|l2": "-log2 ||x|| (origin excluded)",
    "simplex_max": "-log2 max x_i",
    "fstar:nested|blocks[:theta=dyadic]": "max(0, max_n -log2(1 - theta_n min_{block n} x))",
    "affine:a_1,...,a_d,b": "<a, x> + b",
    "sqnorm": "sum x_i^2",
    "supnorm": "max |x_i|",
    "file:PATH": "JSON {\"values\": [...]} (optionally with \"domain\") on the command's grid",
}

UNDEFINED_AT_ORIGIN = ("omega", "neglog")


class UsageError(ApproxConvexError):
    pass


def registry_listing() -> str:
    return "\n".join(f"  {k:<38} {v}" for k, v in REGISTRY_HELP.items())


def resolve_function(name: str, dim: int):
    """Row-wise evaluator for a registry name, or a ``(domain, values)`` file payload."""
    head, _, rest = name.partition(":")
    if head == "entropy":
        return gallery.entropy_rows
    if head == "ribe":
        return gallery.ribe_rows
    if head == "kalton":
        return gallery.kalton_rows
    if head == "omega":
        return gallery.omega_rows
    if head == "neglog":
        kind = rest or "sup"
        if kind not in gallery.NORMS:
            raise UsageError(f"neglog needs a norm in {gallery.NORMS}, got {kind!r}")
        return lambda X: gallery.neg_log_norm_rows(X, kind)
    if head == "simplex_max":
        return gallery.simplex_max_rows
    if head == "fstar":
        parts = [p for p in rest.split(":") if p]
        variant, theta = "blocks", "dyadic"
        for p in parts:
            if p.startswith("theta="):
                theta = p[len("theta="):]
            else:
                variant = p
        cfg = gallery.FStarConfig(variant, theta)
        return lambda X: gallery.f_star_rows(X, cfg)
    if head == "affine":
        try:
            coef = [float(Fraction(v)) for v in rest.split(",")]
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad affine coefficients {rest!r}") from None
        if len(coef) != dim + 1:
            raise UsageError(f"affine needs {dim + 1} numbers (a_1..a_{dim}, b), got {len(coef)}")
        a, b = np.array(coef[:-1]), coef[-1]
        return lambda X: X @ a + b
    if head == "sqnorm":
        return lambda X: (X * X).sum(axis=1)
    if head == "supnorm":
        return lambda X: np.abs(X).max(axis=1)
    if head == "file":
        return ("file", rest)
    raise UsageError(f"unknown function {name!r}; registry:\n{registry_listing()}")


def build_function(args) -> SampledFunction:
    dom = make_grid(args.body, args.dim, args.k)
    if args.fn.split(":")[0] in UNDEFINED_AT_ORIGIN:
        dom = dom.without_origin()
    fn = resolve_function(args.fn, args.dim)
    if isinstance(fn, tuple):
        data = json.loads(Path(fn[1]).read_text())
        if "domain" in data:
            fdom = GridDomain.from_json(json.dumps(data["domain"]) if not isinstance(data["domain"], str)
                                        else data["domain"])
            if not fdom.same_as(dom):
                raise UsageError("the value file's domain differs from --body/--dim/--k")
        return SampledFunction(dom, data["values"])
    return sample_function(dom, fn, vectorized=True)


def _n_list(text: str) -> list:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v]


# -- commands ------------------------------------------------------------------


def cmd_defect(args, out: Path):
    sf = build_function(args)
    tp = args.k if args.t_power is None else args.t_power
    if args.kind == "jensen":
        rep = jensen_defect(sf, enumerate_midpoint_pairs(sf.domain, backend=args.backend))
    else:
        triples = enumerate_convex_triples(sf.domain, tp, backend=args.backend)
        rep = (convexity_defect if args.kind == "convex" else affinity_defect)(sf, triples)
    data = rep.to_dict()
    data.update({"function": args.fn, "body": args.body, "dim": args.dim, "k": args.k,
                 "t_power": tp if args.kind != "jensen" else None,
                 "origin_excluded": sf.domain.n_points != make_grid(args.body, args.dim, args.k).n_points})
    checks = {}
    if args.expect_max is not None:
        checks["value_le_expect_max"] = bool(rep.value <= args.expect_max)
    print(f"{args.kind} defect of {args.fn}: {rep.value:.17g}")
    return [write_json(out / "defect.json", data)], checks


def cmd_distance(args, out: Path):
    sf = build_function(args)
    checks = {}
    data = {"function": args.fn, "class": args.cls, "body": args.body, "dim": args.dim, "k": args.k}
    if args.cls == "convex":
        d, g = distance_to_convex(sf, backend=args.backend)
        data["distance"] = d
        if args.method == "both":
            direct = direct_convex_distance(sf, backend=args.backend)
            data["direct_distance"] = direct.d
            checks["routes_agree"] = bool(abs(direct.d - d) <= 1e-6)
        gvals = g.values
    elif args.cls == "affine":
        coeffs, d = best_affine_fit(sf, backend=args.backend)
        data.update(distance=d, coefficients=list(coeffs))
        gvals = np.asarray(sf.domain.coords) @ coeffs[:-1] + coeffs[-1]
    else:
        g, d = best_jensen_fit(sf, backend=args.backend)
        data["distance"] = d
        gvals = g.values
    cols = [f"x{i + 1}" for i in range(sf.domain.dim)] + ["f", "g"]
    rows = [list(x) + [fv, gv] for x, fv, gv in zip(sf.domain.coords, sf.values, gvals)]
    print(f"distance of {args.fn} to {args.cls}: {data['distance']:.17g}")
    return [write_json(out / "distance.json", data), write_csv(out / "distance_fit.csv", cols, rows)], checks


def cmd_gallery(args, out: Path):
    table = gallery.growth_report(args.family, _n_list(args.n))
    rows = table.rows
    ok = all(r[1] >= r[3] - 1e-9 for r in rows)
    checks = {"flat_value_ge_lower_bound": ok}
    if args.family in ("omega", "entropy", "f_star"):
        checks["extreme_points_zero"] = all(r[2] == 0 for r in rows)
    paths = [write_csv(out / f"gallery_{args.family}.csv", table.columns, rows),
             write_dat(out / f"gallery_{args.family}.dat", table.columns, rows),
             write_json(out / f"gallery_{args.family}.json", {"family": args.family, "meta": table.meta})]
    for r in rows:
        print("  ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r))
    return paths, checks


def cmd_lift(args, out: Path):
    dom = make_grid(args.body, args.dim, args.k)
    fn = resolve_function(args.fn, args.dim)
    if isinstance(fn, tuple):
        raise UsageError("lift takes a registry function")
    base = sample_function(dom, fn, vectorized=True)
    rng = np.random.default_rng(args.seed)
    sf = base.with_values(base.values + rng.uniform(-args.noise, args.noise, dom.n_points))
    rep = affine_recovery_experiment(sf, M_assumed=args.M, norm=args.norm, backend=args.backend)
    data = rep.to_dict()
    data.update(noise=args.noise, function=args.fn)
    checks = {"measured_d_le_bound": rep.holds}
    if args.noise > 0:
        checks["measured_d_le_5_noise"] = bool(rep.measured_d <= 5 * args.noise)
    paths = [write_json(out / "lift.json", data)]
    if args.jensen:
        lift = radial_jensen_lift(sf, norm=args.norm, backend=args.backend)
        q = lift_quasilinearity(lift, domain=dom)
        jd = {"per_line_max_fit_error": float(lift.fit_error.max()),
              "per_line_max_error": lift.per_line_max_error, "measured_Q": q.value,
              "pairs": q.test_set_size, "skipped_off_ray": q.meta.get("skipped_off_ray", 0)}
        paths.append(write_json(out / "lift_jensen.json", jd))
    print(f"eps={rep.epsilon:.6g} d={rep.measured_d:.6g} optimal={rep.optimal_d:.6g} "
          f"bound={rep.theoretical_bound:.6g} Q={rep.measured_Q:.6g}")
    return paths, checks


def cmd_talagrand(args, out: Path):
    p = parse_p(args.p)
    eps = _as_fraction(args.eps)
    lemma = []
    checks = {}
    for n in _n_list(args.n):
        cs = make_covering_system(eps, n)
        su = verify_small_union(cs)
        part = verify_partition_sum(cs)
        qn = quasi_norm(cs, cs.ones(), p)
        block_norms = {quasi_norm(cs, cs.indicator_A(i), p).objective for i in range(1, n + 1)}
        lemma.append({"n": n, "m": cs.m, "omega_size": cs.size, "small_union_holds": su.holds,
                      "sets_checked": su.checked, "partition_holds": part.holds,
                      "quasi_norm_ones": qn.objective, "block_norms": sorted(block_norms)})
        checks[f"n={n}:small_union"] = su.holds
        checks[f"n={n}:partition"] = part.holds
        checks[f"n={n}:block_norm_one"] = block_norms == {1.0}
    rows = envelope_gap_report(eps, _n_list(args.n), p, backend=args.backend)
    for r in rows:
        checks[f"n={r.n}:gap"] = r.holds
    table = [r.as_tuple() for r in rows]
    paths = [write_json(out / "talagrand.json", {"eps": eps, "p": p, "blocks": lemma}),
             write_csv(out / "talagrand_gap.csv", GAP_COLUMNS, table),
             write_dat(out / "talagrand_gap.dat", GAP_COLUMNS, table)]
    print("  ".join(GAP_COLUMNS))
    for t in table:
        print("  ".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in t))
    return paths, checks


def cmd_preimage(args, out: Path):
    if args.target:
        y = [Fraction(v) for v in args.target.split(",")]
        if len(y) != args.dim:
            raise UsageError(f"--target has {len(y)} coordinates, expected {args.dim}")
    else:
        rng = np.random.default_rng(args.seed)
        scale = 1 << 10
        y = [Fraction(int(v), scale) for v in rng.integers(-scale, scale + 1, args.dim)]
    res = iterative_preimage(sign_oracle, y, eps=args.eps, k_max=args.k, p=Fraction(1, 2))
    cols = ("step", "residual", "envelope")
    rows = [(i, float(r), float(e)) for i, (r, e) in enumerate(zip(res.residuals, res.envelope))]
    checks = {"residual_le_envelope": all(r <= e for r, e in zip(res.residuals, res.envelope)),
              "p_sum_le_bound": bool(res.p_sum <= res.p_sum_bound + 1e-9)}
    data = {"target": y, "eps": _as_fraction(args.eps), "k": args.k,
            "coefficients": res.coefficients, "points": [list(x) for x in res.points],
            "p_sum": res.p_sum, "p_sum_bound": res.p_sum_bound}
    print(f"final residual {float(res.residuals[-1]):.6g}  p-sum {res.p_sum:.6g} <= {res.p_sum_bound:.6g}")
    return [write_json(out / "preimage.json", data), write_csv(out / "preimage_trace.csv", cols, rows),
            write_dat(out / "preimage_trace.dat", cols, rows)], checks


COMMANDS = {
    "defect": cmd_defect, "distance": cmd_distance, "gallery": cmd_gallery, "lift": cmd_lift,
    "talagrand": cmd_talagrand, "preimage": cmd_preimage,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="approxconvex", description=__doc__.splitlines()[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog="functions:\n" + registry_listing())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--backend", choices=["auto", *kernels.BACKENDS], default="auto")

    def grid(p, fn_required=True):
        p.add_argument("--body", choices=BODY_KINDS, required=True)
        p.add_argument("--dim", type=int, required=True)
        p.add_argument("--k", type=int, required=True, help="grid step 2^-k")
        p.add_argument("--fn", required=fn_required, help="registry name (see below)")

    p = sub.add_parser("defect", help="convexity / affinity / Jensen defect on a grid")
    grid(p)
    p.add_argument("--kind", choices=["convex", "affine", "jensen"], default="convex")
    p.add_argument("--t-power", type=int, default=None, help="t ranges over multiples of 2^-t_power")
    p.add_argument("--expect-max", type=float, default=None, help="fail unless value <= this")
    common(p)

    p = sub.add_parser("distance", help="distance to the convex / affine / Jensen class")
    grid(p)
    p.add_argument("--class", dest="cls", choices=["convex", "affine", "jensen"], default="convex")
    p.add_argument("--method", choices=["minorant", "both"], default="minorant",
                   help="'both' also solves the direct constrained LP and checks agreement")
    common(p)

    p = sub.add_parser("gallery", help="growth table for a gallery family")
    p.add_argument("--family", choices=gallery.FAMILIES, required=True)
    p.add_argument("--n", default="1..8", help="range 'a..b' or list 'a,b,c'")
    common(p)

    p = sub.add_parser("lift", help="affine recovery through the radial lift")
    grid(p)
    p.add_argument("--noise", type=float, default=0.0, help="uniform noise amplitude")
    p.add_argument("--M", type=float, default=200.0, help="assumed K-space constant")
    p.add_argument("--norm", choices=["sup", "l1", "l2"], default="sup")
    p.add_argument("--jensen", action="store_true", help="also build the degree-2 lift")
    common(p)

    p = sub.add_parser("talagrand", help="covering-system lemmas and the envelope gap table")
    p.add_argument("--eps", default="1")
    p.add_argument("--n", default="2,3,4")
    p.add_argument("--p", default="1/2")
    common(p)

    p = sub.add_parser("preimage", help="iterative preimage with the sign oracle on the cube")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--eps", default="0")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--target", default=None, help="comma-separated rationals in [-1, 1]")
    common(p)

    p = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="directory for the re-run (default: <manifest dir>/replay)")
    return parser


def _run(command: str, params: dict, out: Path):
    args = argparse.Namespace(**params)
    if getattr(args, "backend", "auto") == "auto":
        args.backend = None
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command, params, params.get("seed"))
    t0 = time.perf_counter()
    paths, checks = COMMANDS[command](args, out)
    manifest.timings["seconds"] = round(time.perf_counter() - t0, 3)
    manifest.record_outputs(paths)
    manifest.checks = checks
    manifest.write(out / "manifest.json")
    return manifest


def _finish(manifest) -> int:
    failed = [k for k, v in manifest.checks.items() if not v]
    if failed:
        print(json.dumps({"command": manifest.command, "failed_checks": failed}), file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "replay":
            src = Path(ns.manifest)
            old = RunManifest.load(src)
            out = Path(ns.out) if ns.out else src.parent / "replay"
            params = dict(old.params)
            params["out"] = str(out)
            new = _run(old.command, params, out)
            mismatched = sorted(k for k in old.outputs if new.outputs.get(k) != old.outputs[k])
            new.checks["outputs_identical"] = not mismatched
            new.write(out / "manifest.json")
            if mismatched:
                print(f"outputs differ: {', '.join(mismatched)}", file=sys.stderr)
            return _finish(new)
        params = {k: v for k, v in vars(ns).items() if k != "command"}
        return _finish(_run(ns.command, params, Path(ns.out)))
    except UsageError as exc:
        parser.exit(2, f"approxconvex {ns.command}: error: {exc}\n")
    except ApproxConvexError as exc:
        parser.exit(2, f"approxconvex {ns.command}: error: {type(exc).__name__}: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
