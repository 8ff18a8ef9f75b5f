"""Command-line driver: ``treewire {exact,dist,tau,diam,check,analyze}``.

Every run writes a directory under ``$TREEWIRE_OUTPUT_ROOT`` (default
``./treewire-runs``) unless ``--out`` names one.  Exit status is 0 when
every check in the run passed, 1 when a statistical check failed and 2 for
usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConvergenceError, TreewireError
from .stats import TimeSeries, bin_series, bootstrap_stderr, tau_int
from .tree import load_edge_list

OUTPUT_ROOT_ENV = "TREEWIRE_OUTPUT_ROOT"
EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

TAU_EXPONENT_BAND = (0.75, 0.87)
TAU_REDUCED_CHI2_BAND = (0.3, 3.0)
DIAMETER_EXPONENT_BAND = (0.47, 0.54)

log = logging.getLogger("treewire")


def parse_count(text: str) -> int:
    """Integer that may be written in float notation, e.g. ``1e7``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value != int(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(value)


def parse_n_values(text: str) -> list[int]:
    """Sizes from ``4,5,6``, ``10,20,...,1000`` or ``log:10:1000:15``.

    The ellipsis form continues the step of the first two terms up to and
    including the last.  ``log:lo:hi:k`` gives ``k`` log-spaced sizes rounded
    to integers, duplicates dropped.
    """
    text = text.strip()
    try:
        if text.startswith("log:"):
            lo, hi, k = (float(p) for p in text[4:].split(":"))
            grid = np.round(np.logspace(math.log10(lo), math.log10(hi), int(k)))
            return sorted({int(v) for v in grid})
        parts = [p.strip() for p in text.split(",")]
        if "..." in parts:
            i = parts.index("...")
            if i != 2 or len(parts) != 4:
                raise ValueError("ellipsis form is a,b,...,c")
            a, b, c = int(parts[0]), int(parts[1]), int(parts[3])
            if b <= a or c < b:
                raise ValueError("ellipsis form needs a < b <= c")
            return list(range(a, c + 1, b - a))
        return [int(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --n value {text!r}: {exc}") from None


def parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must be 'lo,hi', got {text!r}") from None
    return lo, hi


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treewire",
                                     description="Uniform spanning-tree sampler by edge rewiring.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sampling=True):
        p.add_argument("--n", type=parse_n_values, required=True, help="size(s), see docs")
        p.add_argument("--out", help="run directory (default: under $%s)" % OUTPUT_ROOT_ENV)
        if not sampling:
            return
        p.add_argument("--sweeps", type=parse_count, help="measurement sweeps per chain")
        p.add_argument("--thermalization", type=parse_count,
                       help="burn-in sweeps (default max(1e4, 10 tau guess))")
        p.add_argument("--replicas", type=parse_count)
        p.add_argument("--bootstrap", type=parse_count)
        p.add_argument("--bin-size", type=parse_count, default=1000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--paper-scale", action="store_true",
                       help="published run lengths (slow)")
        p.add_argument("--checkpoint-every", type=parse_count, default=0)
        p.add_argument("--load-tree", help="start every chain from this edge-list file")
        p.add_argument("--dump-tree", help="write the final tree of the last chain here")
        p.add_argument("--save-series", action="store_true")

    common(sub.add_parser("exact", help="exact class table and mean diameter (n <= 8)"),
           sampling=False)
    p = sub.add_parser("check", help="exact transition-matrix checks (3 <= n <= 6)")
    common(p, sampling=False)

    p = sub.add_parser("dist", help="sampled class distribution versus exact")
    common(p)
    p.add_argument("--z-max", type=float, default=4.0)

    for name, helptext in (("tau", "tau_int scaling of the diameter"),
                           ("diam", "mean-diameter scaling")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--exclude-outliers", type=_int_list, default=[],
                       help="comma-separated sizes left out of the fit")
        p.add_argument("--exponent-band", type=parse_band)
        p.add_argument("--z-max", type=float, default=4.0)
        if name == "tau":
            p.add_argument("--window-factor", type=float, default=1.5)
            p.add_argument("--reduced-chi2-band", type=parse_band)
        else:
            p.add_argument("--fit-min", type=int, default=None,
                           help="smallest n in the fit (published runs used 700)")

    p = sub.add_parser("analyze", help="tau_int and binned error of a saved series CSV")
    p.add_argument("series", help="CSV written by --save-series")
    p.add_argument("--bin-size", type=parse_count, default=1000)
    p.add_argument("--bootstrap", type=parse_count, default=10_000)
    p.add_argument("--window-factor", type=float, default=1.5)
    p.add_argument("--seed", type=int, default=42)
    return parser


KIND = {"exact": "exact", "check": "transition-check", "dist": "distribution",
        "tau": "tau-scaling", "diam": "diameter-scaling"}


def _run_dir(args) -> str:
    if args.out:
        return args.out
    root = os.environ.get(OUTPUT_ROOT_ENV, "treewire-runs")
    label = f"{args.command}-n{args.n[0]}" + (f"-{args.n[-1]}" if len(args.n) > 1 else "")
    if getattr(args, "seed", None) is not None and args.command not in ("exact", "check"):
        label += f"-seed{args.seed}"
    return str(Path(root) / label)


def manifest_from_args(args) -> ex.ExperimentManifest:
    kind = KIND[args.command]
    m = ex.ExperimentManifest(kind, list(args.n), output_dir=_run_dir(args))
    if kind in ("exact", "transition-check"):
        return m
    preset = dict(ex.DESK_SCALE)
    if kind != "distribution":
        preset["replicas"] = 1  # one long chain per size
    if args.paper_scale:
        preset.update(ex.PAPER_SCALE[kind])
    for key in ("sweeps", "thermalization", "replicas", "bootstrap"):
        value = getattr(args, key)
        if value is not None:
            preset[key] = value
    m = replace(m, seed=args.seed, bin_size=args.bin_size, workers=args.workers,
                checkpoint_every=args.checkpoint_every, z_max=args.z_max,
                save_series=args.save_series, **preset)
    if kind == "tau-scaling":
        m = replace(m, exclude=args.exclude_outliers, window_factor=args.window_factor,
                    exponent_band=args.exponent_band or TAU_EXPONENT_BAND,
                    reduced_chi2_band=args.reduced_chi2_band or TAU_REDUCED_CHI2_BAND)
    elif kind == "diameter-scaling":
        fit_min = args.fit_min if args.fit_min is not None else preset.get("fit_min")
        m = replace(m, exclude=args.exclude_outliers, fit_min=fit_min,
                    exponent_band=args.exponent_band or DIAMETER_EXPONENT_BAND)
    return m


def _print_rows(rows: list[dict]) -> None:
    if not rows:
        return
    keys = list(rows[0])
    print("\t".join(keys))
    for row in rows:
        print("\t".join(_fmt(row.get(k, "")) for k in keys))


def _fmt(v) -> str:
    return f"{v:.7g}" if isinstance(v, float) else str(v)


def _summary(report) -> None:
    fit = getattr(report, "fit", None)
    if fit is not None:
        d = fit.as_dict()
        params = ", ".join(f"{k}={v:.5g}({d['errors'][k]:.2g})" for k, v in d["params"].items())
        print(f"fit {d['model']}: {params}; chi2/dof={d['reduced_chi2']:.3g} (dof {d['dof']})")
    if getattr(report, "notice", None):
        print(f"notice: {report.notice}")
    if hasattr(report, "p_lower"):
        print(f"chi2={report.chi2:.4g} dof={report.dof} P(lower)={report.p_lower:.3g} "
              f"p(upper)={report.p_upper:.3g}")
    if hasattr(report, "mean_diameter"):
        print(f"mean diameter = {report.mean_diameter} = {report.mean_diameter_float!r}")
    for name, ok in report.checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")


def _analyze(args) -> int:
    series = TimeSeries.from_csv(args.series)
    est = tau_int(series, args.window_factor)
    bins = bin_series(series, args.bin_size)
    err = bootstrap_stderr(bins, args.bootstrap, args.seed)
    print(json.dumps({"mean": float(series.values.mean()), "stderr": err, "bins": int(bins.size),
                      "tau_int": est.tau_int, "tau_int_error": est.error, "window": est.window,
                      "samples": est.series_length}, indent=2, sort_keys=True))
    return EXIT_OK


def _execute(args) -> int:
    if args.command == "analyze":
        return _analyze(args)
    manifest = manifest_from_args(args)
    kind = manifest.kind
    if kind in ("exact", "transition-check"):
        if len(args.n) != 1:
            raise TreewireError(f"{args.command} takes a single n")
        report = ex.run_exact(args.n[0]) if kind == "exact" else ex.run_transition_check(args.n[0])
        manifest.validate()
    else:
        initial = None
        if args.load_tree:
            with open(args.load_tree) as fp:
                initial = load_edge_list(fp)
        run = {"distribution": ex.run_distribution_experiment,
               "tau-scaling": ex.run_tau_experiment,
               "diameter-scaling": ex.run_diameter_experiment}[kind]
        try:
            report = run(manifest, initial)
        except ConvergenceError as exc:
            print(f"fit failed: {exc}; partial results in {manifest.output_dir}", file=sys.stderr)
            return EXIT_FAILED
    out = ex.write_outputs(manifest, report, getattr(args, "dump_tree", None))
    _print_rows(getattr(report, "rows", []))
    _summary(report)
    print(f"results written to {out}")
    return EXIT_OK if report.passed else EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _execute(args)
    except (TreewireError, ValueError, OSError) as exc:
        print(f"treewire: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
