"""Command-line front end: ``splinecal {metrics,fit,apply,curves,synth}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import metrics
from .curves import ks_error
from .dataset import CalibrationTarget, read_csv, score_target, write_csv
from .fileio import atomic_write_text
from .recalibrate import DEFAULT_KNOTS, build, build_maps, fit_curves, load_maps, recalibrate_evalset, save_maps
from .synth import LINKS, SynthSpec, generate

SEED_ENV = "SPLINECAL_SEED"


class CLIError(Exception):
    pass


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CLIError(f"{SEED_ENV}={env!r} is not an integer") from None


def _target(text):
    try:
        return CalibrationTarget.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _knots(text):
    k = int(text)
    if k < 3:
        raise argparse.ArgumentTypeError("--knots must be >= 3")
    return k


def _bins(text):
    b = int(text)
    if b < 1:
        raise argparse.ArgumentTypeError("--bins must be >= 1")
    return b


def _existing(path, flag):
    if path is None:
        raise CLIError(f"{flag} is required")
    if not Path(path).is_file():
        raise CLIError(f"{flag}: no such file {path}")
    return path


def _emit_json(doc, out):
    text = json.dumps(doc, indent=2) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(Path(out), text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else repr(float(v)) for v in r])
    return buf.getvalue()


def cmd_metrics(args):
    ev = read_csv(_existing(args.test, "--test"), args.kind)
    _emit_json(metrics.report(ev, args.target, args.bins, args.knots), args.out)


def cmd_fit(args):
    ev = read_csv(_existing(args.calib, "--calib"), args.kind)
    if args.out is None:
        raise CLIError("--out is required")
    if args.mode == "classwise":
        maps = build_maps(ev, "classwise", args.knots)
    else:
        maps = [build(score_target(ev, args.target), args.knots)]
    save_maps(maps, args.out)


def cmd_apply(args):
    maps = load_maps(_existing(args.map, "--map"))
    ev = read_csv(_existing(args.test, "--test"), args.kind)
    if args.mode == "top1":
        if [str(m.target) for m in maps] != ["top:1"]:
            raise CLIError(f"top1 mode needs a single top:1 map, got {[str(m.target) for m in maps]}")
        if args.target != CalibrationTarget.top(1):
            raise CLIError(f"--target {args.target} does not match the top:1 map")
    out = recalibrate_evalset(ev, maps, args.mode)
    doc = {
        "mode": args.mode,
        "before": metrics.report(ev, args.target, args.bins, maps[0].knots_used),
        "after": metrics.report(out, args.target, args.bins, maps[0].knots_used),
    }
    if args.out is not None:
        write_csv(out, args.out)
    _emit_json(doc, args.report)


def cmd_curves(args):
    path = args.test if args.test is not None else args.calib
    ev = read_csv(_existing(path, "--test/--calib"), args.kind)
    if args.out is None:
        raise CLIError("--out (a directory) is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = fit_curves(score_target(ev, args.target), args.knots)
    c = res.curves
    scores = [None, *c.sorted_scores]
    atomic_write_text(out / "curves.csv", _csv_text(
        ["fractile", "score", "cum_prob", "cum_score"],
        zip(c.fractiles, scores, c.h, c.h_tilde)))
    atomic_write_text(out / "curves_warped.csv", _csv_text(
        ["cum_score", "score_curve", "prob_curve"],
        zip(c.h_tilde, c.h_tilde, c.h)))
    atomic_write_text(out / "spline.csv", _csv_text(
        ["fractile", "score", "prob"],
        zip(c.fractiles[1:], c.sorted_scores, res.slope)))
    _emit_json({"target": str(args.target), "knots": args.knots, "n": c.n,
                "ks": ks_error(c), "dir": str(out)}, None)


def cmd_synth(args):
    if args.out is None:
        raise CLIError("--out is required")
    spec = SynthSpec(n_samples=args.n, n_classes=args.classes, score_low=args.low, score_high=args.high,
                     link=args.link, param=args.param, seed=_seed(args.seed))
    write_csv(generate(spec), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--target", type=_target, default=CalibrationTarget.top(1),
                        help="class:K, top:R or within:R (default top:1)")
    common.add_argument("--knots", type=_knots, default=DEFAULT_KNOTS)
    common.add_argument("--bins", type=_bins, default=metrics.DEFAULT_BINS)
    common.add_argument("--kind", choices=("logits", "probs", "scores"), default="probs",
                        help="how to read score columns; 'scores' skips the row-sum check")
    common.add_argument("--calib")
    common.add_argument("--test")
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    common.add_argument("--mode", choices=("top1", "classwise"), default="top1")

    p = argparse.ArgumentParser(prog="splinecal", description="Binning-free calibration metrics and spline recalibration.")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("metrics", parents=[common], help="KS, ECE, MCE, Brier and accuracy for one file")
    sp.set_defaults(func=cmd_metrics)
    sp = sub.add_parser("fit", parents=[common], help="fit a recalibration map on --calib, write JSON to --out")
    sp.set_defaults(func=cmd_fit)
    sp = sub.add_parser("apply", parents=[common], help="apply a map to --test, write CSV to --out")
    sp.add_argument("--map", help="map JSON written by 'fit'")
    sp.add_argument("--report", help="before/after metrics JSON (default stdout)")
    sp.set_defaults(func=cmd_apply)
    sp = sub.add_parser("curves", parents=[common], help="write plot-ready CSVs into the --out directory")
    sp.set_defaults(func=cmd_curves)
    sp = sub.add_parser("synth", parents=[common], help="write a synthetic probability CSV")
    sp.add_argument("--n", type=int, default=20000)
    sp.add_argument("--classes", type=int, default=10)
    sp.add_argument("--low", type=float, default=0.5)
    sp.add_argument("--high", type=float, default=1.0)
    sp.add_argument("--link", choices=LINKS, default="identity")
    sp.add_argument("--param", type=float, default=1.0)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CLIError, ValueError, OSError) as exc:
        print(f"splinecal {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
