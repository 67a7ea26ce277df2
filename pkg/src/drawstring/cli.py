"""Command-line entry points.

Subcommands
    forge    build the glued drawstring metric for (epsilon, r0), verify the
             five conditions, write report JSON and profile CSV/JSON
    verify   re-verify a previously exported profile JSON
    tube     build the three tube metrics at epsilon = r0 = 1/i and check
             the distance claims on sampled pairs
    entropy  growth exponent of a weighted generator set, both computation
             paths, plus a growth-curve CSV
    export   build and export a profile without running the verifier

Exit status: 0 on success, 1 when a verification fails (reports are still
written), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .entropy import (
    GrowthModel,
    ball_growth_bfs,
    compare_entropy,
    fit_growth_rate,
    growth_rate_transfer,
    _auto_L,
)
from .gluing import forge as forge_pipeline
from .gluing import verify_glued_conditions
from .io import export_profile, load_profile, write_json_report
from .tube import build_tube_metrics, verify_squeeze_claims


def _parse_tol_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise argparse.ArgumentTypeError(
                f"tolerance override {item!r} must look like KEY=VALUE"
            )
        key, val = item.split("=", 1)
        out[key] = float(val)
    return out


def _unit_interval(text):
    val = float(text)
    if not 0.0 < val < 1.0:
        raise argparse.ArgumentTypeError(f"{val} must lie in (0, 1)")
    return val


def _grid(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be NR,NT,NZ")
    return tuple(int(p) for p in parts)


def _lengths(text):
    vals = tuple(float(p) for p in text.split(",") if p)
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("lengths must be positive numbers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="drawstring",
        description="drawstring warped metrics: construction and certification",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forge", help="build and verify a glued metric")
    p.add_argument("--epsilon", type=_unit_interval, required=True)
    p.add_argument("--r0", type=_unit_interval, required=True)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--format", choices=("csv", "json", "both"), default="csv")
    p.add_argument("--tol-override", action="append", metavar="KEY=VAL")

    p = sub.add_parser("verify", help="re-verify an exported profile")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--epsilon", type=_unit_interval, required=True)
    p.add_argument("--r0", type=_unit_interval, required=True)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--tol-override", action="append", metavar="KEY=VAL")

    p = sub.add_parser("tube", help="tube metrics and distance claims")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--grid", type=_grid, default=(96, 64, 64))
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--pairs-csv", action="store_true",
                   help="also write the sampled pair distances")

    p = sub.add_parser("entropy", help="growth exponent of a generator set")
    p.add_argument("--lengths", type=_lengths, required=True)
    p.add_argument("--L", type=float, default=None,
                   help="enumeration radius (default: auto)")
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("export", help="build and export a profile")
    p.add_argument("--epsilon", type=_unit_interval, required=True)
    p.add_argument("--r0", type=_unit_interval, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, required=True)

    return ap


def _cmd_forge(args) -> int:
    tol = _parse_tol_overrides(args.tol_override)
    profile, params, report = forge_pipeline(args.epsilon, args.r0)
    if tol:
        report = verify_glued_conditions(profile, args.epsilon, args.r0, tolerances=tol)
    report["params"] = params.to_dict()
    args.out.mkdir(parents=True, exist_ok=True)
    write_json_report(report, args.out / "forge_report.json")
    if args.format in ("csv", "both"):
        export_profile(profile, args.out / "profile.csv", "csv")
    if args.format in ("json", "both"):
        export_profile(profile, args.out / "profile.json", "json")
    print(f"forge eps={args.epsilon} r0={args.r0}: "
          + ("all conditions pass" if report["all_pass"] else "FAILURES"))
    for name, cond in report["conditions"].items():
        print(f"  {name}: {'pass' if cond['pass'] else 'FAIL'}")
    return 0 if report["all_pass"] else 1


def _cmd_verify(args) -> int:
    profile = load_profile(args.infile)
    tol = _parse_tol_overrides(args.tol_override)
    report = verify_glued_conditions(profile, args.epsilon, args.r0,
                              tolerances=tol or None)
    args.out.mkdir(parents=True, exist_ok=True)
    write_json_report(report, args.out / "verify_report.json")
    print("all conditions pass" if report["all_pass"] else "FAILURES present")
    return 0 if report["all_pass"] else 1


def _cmd_tube(args) -> int:
    if args.i < 2:
        print("--i must be at least 2", file=sys.stderr)
        return 2
    eps = 1.0 / args.i
    profile, params, forge_report = forge_pipeline(eps, eps)
    models = build_tube_metrics(args.i, profile, grid=args.grid)
    rep = verify_squeeze_claims(models, sample_count=args.samples,
                                seed=args.seed)
    payload = {
        "i": args.i,
        "grid": list(args.grid),
        "claims": rep.to_dict(),
        "forge_all_pass": forge_report["all_pass"],
        "params": params.to_dict(),
        "schema_version": 1,
    }
    args.out.mkdir(parents=True, exist_ok=True)
    write_json_report(payload, args.out / f"tube_report_i{args.i}.json")
    if args.pairs_csv:
        _write_pairs_csv(models, rep, args)
    ok = (rep.sandwich_ok and rep.monotone_violation <= 1e-9
          and abs(rep.core_ratio_gi - 0.5) <= 0.02
          and rep.boundary_to_core_ghat < 100.0 * eps)
    print(f"tube i={args.i}: c_i={rep.c_i:.6g} "
          + ("claims hold" if ok else "CLAIM FAILURES"))
    return 0 if ok else 1


def _write_pairs_csv(models, rep, args):
    import numpy as np

    from .tube import _sample_pairs

    g0, ghat, gi = models
    rng = np.random.default_rng(rep.details.get("seed", 0))
    sources, targets = _sample_pairs(g0, rep.pairs, rng)
    d0 = g0.distances_from(sources)[:, targets]
    dh = ghat.distances_from(sources)[:, targets]
    dg = gi.distances_from(sources)[:, targets]
    path = args.out / f"tube_pairs_i{args.i}.csv"
    with path.open("w") as fh:
        fh.write("source,target,d_g0,d_ghat,d_gi\n")
        for a, src in enumerate(sources):
            for b, tgt in enumerate(targets):
                fh.write(f"{src},{tgt},{d0[a,b]!r},{dh[a,b]!r},{dg[a,b]!r}\n")


def _cmd_entropy(args) -> int:
    model = GrowthModel(args.lengths)
    h = growth_rate_transfer(model)
    L = args.L if args.L is not None else _auto_L(model, h)
    counts = ball_growth_bfs(model, L)
    h_fit, stderr = fit_growth_rate(counts)
    payload = {
        "lengths": list(model.lengths),
        "h_transfer": h,
        "h_fit": h_fit,
        "h_fit_stderr": stderr,
        "L": L,
        "words": counts[-1][1],
        "counts": [[r, c] for r, c in counts],
        "schema_version": 1,
    }
    args.out.mkdir(parents=True, exist_ok=True)
    write_json_report(payload, args.out / "entropy_report.json")
    with (args.out / "growth_curve.csv").open("w") as fh:
        fh.write("radius,count\n")
        for r, c in counts:
            fh.write(f"{r!r},{c}\n")
    print(f"h_transfer={h:.10f}  h_fit={h_fit:.6f} (+-{2*stderr:.2g})")
    return 0


def _cmd_export(args) -> int:
    profile, params, _report = forge_pipeline(args.epsilon, args.r0)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    export_profile(profile, args.out, args.format)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "forge": _cmd_forge,
        "verify": _cmd_verify,
        "tube": _cmd_tube,
        "entropy": _cmd_entropy,
        "export": _cmd_export,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
