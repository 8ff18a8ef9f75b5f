"""Reproduction experiments: distribution validation, tau_int and diameter scaling.

Each experiment takes an :class:`ExperimentManifest`, fans replicas out over
an optional thread pool (the jitted kernels release the GIL), reduces the
results keyed by ``(n, replica)`` and returns a report.  :func:`write_outputs`
puts ``manifest.json``, ``results.json``, ``table.csv`` and ``plotdata.dat``
in the run directory; none of them contain timings, so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConvergenceError, DegenerateErrorError, UnsupportedSizeError
from .exact import (MAX_ENUMERATION_N, class_index_table, exact_class_distribution,
                    exact_mean_observable)
from .observables import diameter
from .rewire import (ChainConfig, MarkovChain, asymmetric_entry, build_transition_matrix,
                     class_histogram, stationary_distribution, support_period,
                     support_strongly_connected)
from .rng import stream_seed
from .stats import (FitResult, TauIntEstimate, bin_series, bootstrap_stderr, chi2_cdf, chi2_sf,
                    chi_square, fit_power_law, tau_int, z_score)
from .tree import SpanningTree, dump_edge_list

log = logging.getLogger(__name__)

KINDS = ("distribution", "tau-scaling", "diameter-scaling", "exact", "transition-check")

# Monomial from the published tau_int fit, used only to size thermalization.
TAU_GUESS_A = 0.08233
TAU_GUESS_B = 0.8116

DESK_SCALE = {"sweeps": 100_000, "replicas": 20, "bootstrap": 10_000}
PAPER_SCALE = {
    "distribution": {"sweeps": 10_000_000, "replicas": 100, "bootstrap": 1_000_000,
                     "thermalization": 100_000},
    "tau-scaling": {"sweeps": 1_000_000, "replicas": 1, "bootstrap": 1_000_000,
                    "thermalization": 100_000},
    "diameter-scaling": {"sweeps": 1_000_000, "replicas": 1, "bootstrap": 1_000_000,
                         "thermalization": 100_000, "fit_min": 700},
}

STOCHASTIC_TOL = 1e-12


def default_thermalization(n: int) -> int:
    """max(10^4, 10 tau_guess(n)) sweeps."""
    return max(10_000, math.ceil(10 * TAU_GUESS_A * n ** TAU_GUESS_B))


@dataclass
class ExperimentManifest:
    kind: str
    n_values: list[int]
    sweeps: int = DESK_SCALE["sweeps"]
    thermalization: int | None = None
    replicas: int = 1
    bootstrap: int = DESK_SCALE["bootstrap"]
    bin_size: int = 1000
    seed: int = 42
    output_dir: str | None = None
    fit_min: int | None = None
    exclude: list[int] = field(default_factory=list)
    window_factor: float = 1.5
    workers: int = 1
    checkpoint_every: int = 0
    z_max: float = 4.0
    p_band: tuple[float, float] = (0.001, 0.999)
    exponent_band: tuple[float, float] | None = None
    reduced_chi2_band: tuple[float, float] | None = None
    max_exact_n: int = MAX_ENUMERATION_N
    save_series: bool = False

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not self.n_values:
            raise ConfigError("at least one n value is required")
        if list(self.n_values) != sorted(set(self.n_values)):
            raise ConfigError("n values must be distinct and sorted ascending")
        for name in ("sweeps", "replicas", "bootstrap", "bin_size", "workers"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.thermalization is not None and self.thermalization < 0:
            raise ConfigError("thermalization must be non-negative")
        if self.output_dir is not None:
            out = Path(self.output_dir)
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ConfigError(f"cannot create output directory {out}: {exc}") from None
            if not os.access(out, os.W_OK):
                raise ConfigError(f"output directory {out} is not writable")

    def thermalization_for(self, n: int) -> int:
        return default_thermalization(n) if self.thermalization is None else self.thermalization

    def chain_seed(self, n: int, replica: int) -> int:
        return stream_seed(self.seed, n, replica)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thermalization"] = {str(n): self.thermalization_for(n) for n in self.n_values} \
            if self.kind in ("distribution", "tau-scaling", "diameter-scaling") else None
        return d


def _map(manifest: ExperimentManifest, fn, items):
    if manifest.workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=manifest.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _checkpoint_path(manifest, n, r):
    if manifest.output_dir is None or manifest.checkpoint_every <= 0:
        return None
    d = Path(manifest.output_dir) / "checkpoints"
    d.mkdir(parents=True, exist_ok=True)
    return d / f"n{n}-r{r}.json"


def _diameter_series(manifest, n, r, initial=None):
    config = ChainConfig(n, manifest.chain_seed(n, r), manifest.thermalization_for(n),
                         manifest.sweeps)
    chain = MarkovChain(config, initial)
    series = chain.run(diameter, checkpoint=_checkpoint_path(manifest, n, r),
                       checkpoint_every=manifest.checkpoint_every)
    if manifest.save_series and manifest.output_dir is not None:
        d = Path(manifest.output_dir) / "series"
        d.mkdir(parents=True, exist_ok=True)
        series.to_csv(d / f"n{n}-r{r}.csv")
    return series, chain.tree


@lru_cache(maxsize=None)
def _exact_diameter(n: int):
    return exact_mean_observable(n, diameter)


@lru_cache(maxsize=None)
def _class_table(n: int, max_n: int):
    return class_index_table(n, max_n)


# --- distribution ------------------------------------------------------

@dataclass
class DistributionReport:
    n: int
    rows: list[dict]
    chi2: float
    chi2_scaled: float
    dof: int
    p_lower: float
    p_upper: float
    sweeps: int
    replicas: int
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def run_distribution_experiment(manifest: ExperimentManifest,
                                initial: SpanningTree | None = None) -> DistributionReport:
    """Replica histograms of the isomorphism class versus the exact distribution."""
    manifest.validate()
    if len(manifest.n_values) != 1:
        raise ConfigError("distribution experiment takes exactly one n")
    n = manifest.n_values[0]
    if n > manifest.max_exact_n:
        raise UnsupportedSizeError(f"n={n} exceeds the exact-enumeration ceiling "
                                   f"{manifest.max_exact_n}")
    if manifest.replicas < 2:
        raise ConfigError("distribution experiment needs at least two replicas for errors")
    table, records = _class_table(n, manifest.max_exact_n)
    k = len(records)

    estimates = np.array(_map(manifest, _replica_counts(manifest, n, table, k, initial),
                              list(range(manifest.replicas)))) / manifest.sweeps
    pi_bar = estimates.mean(axis=0)
    errs = np.array([bootstrap_stderr(estimates[:, i], manifest.bootstrap,
                                      stream_seed(manifest.seed, n, 10**9 + i))
                     for i in range(k)])
    exact = np.array([r.probability_float for r in records])
    if np.any(errs <= 0):
        raise DegenerateErrorError("a class has zero bootstrap error; increase sweeps")
    rows = []
    for rec, est, err in zip(records, pi_bar, errs):
        rows.append({"class": rec.name or rec.code.code, "aut": rec.aut_size,
                     "labellings": rec.labellings, "pi": rec.probability_float,
                     "pi_bar": float(est), "stderr": float(err),
                     "z": z_score(rec.probability_float, float(est), float(err))})
    chi = chi_square(exact, pi_bar, errs)
    dof = k - 1
    p_lower = chi2_cdf(chi.chi2, dof)
    lo, hi = manifest.p_band
    checks = {
        "all |z| <= z_max": all(row["z"] <= manifest.z_max for row in rows),
        "p-value in band": lo < p_lower < hi,
        "pi_bar sums to 1": abs(float(pi_bar.sum()) - 1.0) <= STOCHASTIC_TOL,
    }
    return DistributionReport(n, rows, chi.chi2, chi.scaled, dof, p_lower, chi2_sf(chi.chi2, dof),
                              manifest.sweeps, manifest.replicas, checks)


def _replica_counts(manifest, n, table, k, initial):
    def run(r):
        config = ChainConfig(n, manifest.chain_seed(n, r), manifest.thermalization_for(n), 0)
        chain = MarkovChain(config, initial)
        chain.run(diameter)
        return class_histogram(chain.tree, chain.rng, manifest.sweeps, table, k)
    return run


# --- tau_int scaling ---------------------------------------------------

@dataclass
class ScalingReport:
    kind: str
    rows: list[dict]
    fit: FitResult | None
    fit_points: list[int]
    notice: str | None
    checks: dict[str, bool]
    final_tree: SpanningTree | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return {"kind": self.kind, "rows": self.rows,
                "fit": None if self.fit is None else self.fit.as_dict(),
                "fit_points": self.fit_points, "notice": self.notice,
                "checks": self.checks, "passed": self.passed}


def _band_checks(manifest, fit, checks):
    if fit is None:
        return
    if manifest.exponent_band is not None:
        lo, hi = manifest.exponent_band
        checks["exponent in band"] = bool(lo <= fit.params[1] <= hi)
    if manifest.reduced_chi2_band is not None:
        lo, hi = manifest.reduced_chi2_band
        checks["reduced chi2 in band"] = bool(lo <= fit.reduced_chi2 <= hi)


def run_tau_experiment(manifest: ExperimentManifest,
                       initial: SpanningTree | None = None) -> ScalingReport:
    """tau_int of the diameter per n, then a fit of ``a * n^b``."""
    manifest.validate()
    jobs = [(n, r) for n in manifest.n_values for r in range(manifest.replicas)]

    def job(item):
        n, r = item
        series, tree = _diameter_series(manifest, n, r, initial)
        return tau_int(series, manifest.window_factor), tree

    results = dict(zip(jobs, _map(manifest, job, jobs)))
    rows = []
    for n in manifest.n_values:
        ests: list[TauIntEstimate] = [results[(n, r)][0] for r in range(manifest.replicas)]
        tau = float(np.mean([e.tau_int for e in ests]))
        err = float(math.sqrt(sum(e.error ** 2 for e in ests)) / len(ests))
        rows.append({"n": n, "tau": tau, "err": err, "window": max(e.window for e in ests),
                     "samples": sum(e.series_length for e in ests)})
    pts = [row for row in rows if row["n"] not in manifest.exclude]
    checks: dict[str, bool] = {}
    report = ScalingReport("tau-scaling", rows, None, [p["n"] for p in pts], None, checks,
                           results[jobs[-1]][1])
    if len(pts) < 4:
        report.notice = f"fit skipped: {len(pts)} points, need at least 4"
        return report
    try:
        fit = fit_power_law([p["n"] for p in pts], [p["tau"] for p in pts],
                            [p["err"] for p in pts], with_offset=False)
    except ConvergenceError:
        report.notice = "fit did not converge"
        checks["fit converged"] = False
        if manifest.output_dir:
            write_outputs(manifest, report)
        raise
    report.fit = fit
    for row in rows:
        row["fit"] = float(fit(row["n"]))
    _band_checks(manifest, fit, checks)
    return report


# --- diameter scaling ---------------------------------------------------

def run_diameter_experiment(manifest: ExperimentManifest,
                            initial: SpanningTree | None = None) -> ScalingReport:
    """Mean diameter per n with binned bootstrap errors, then ``a * n^b + c``."""
    manifest.validate()
    jobs = [(n, r) for n in manifest.n_values for r in range(manifest.replicas)]

    def job(item):
        n, r = item
        series, tree = _diameter_series(manifest, n, r, initial)
        return series.values.mean(), bin_series(series, manifest.bin_size), tree

    results = dict(zip(jobs, _map(manifest, job, jobs)))
    rows = []
    checks: dict[str, bool] = {}
    for n in manifest.n_values:
        means = [results[(n, r)][0] for r in range(manifest.replicas)]
        bins = np.concatenate([results[(n, r)][1] for r in range(manifest.replicas)])
        err = bootstrap_stderr(bins, manifest.bootstrap, stream_seed(manifest.seed, n, 2**40))
        row = {"n": n, "mean": float(np.mean(means)), "err": err, "bins": int(bins.size)}
        if 4 <= n <= manifest.max_exact_n:
            exact, exact_float = _exact_diameter(n)
            row["exact"] = f"{exact.numerator}/{exact.denominator}"
            row["exact_float"] = exact_float
            row["z"] = z_score(exact_float, row["mean"], err)
            checks[f"|z| <= z_max at n={n}"] = row["z"] <= manifest.z_max
        rows.append(row)
    fit_min = manifest.fit_min or 0
    pts = [row for row in rows if row["n"] >= fit_min and row["n"] not in manifest.exclude]
    report = ScalingReport("diameter-scaling", rows, None, [p["n"] for p in pts], None, checks,
                           results[jobs[-1]][2])
    if len(pts) < 5:
        report.notice = f"fit skipped: {len(pts)} points at n >= {fit_min}, need at least 5"
        return report
    try:
        fit = fit_power_law([p["n"] for p in pts], [p["mean"] for p in pts],
                            [p["err"] for p in pts], with_offset=True)
    except ConvergenceError:
        report.notice = "fit did not converge"
        checks["fit converged"] = False
        if manifest.output_dir:
            write_outputs(manifest, report)
        raise
    report.fit = fit
    for row in rows:
        row["fit"] = float(fit(row["n"]))
    _band_checks(manifest, fit, checks)
    return report


# --- exact tables ------------------------------------------------------

@dataclass
class ExactReport:
    n: int
    rows: list[dict]
    mean_diameter: str
    mean_diameter_float: float
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def run_exact(n: int, max_n: int = MAX_ENUMERATION_N) -> ExactReport:
    """Exact class table and mean diameter by full enumeration."""
    records = exact_class_distribution(n, max_n)
    mean, mean_float = exact_mean_observable(n, diameter, max_n)
    total = sum((r.probability for r in records), Fraction(0))
    checks = {"labellings sum to n^(n-2)": sum(r.labellings for r in records) == n ** (n - 2),
              "probabilities sum to 1": total == 1}
    return ExactReport(n, [r.as_dict() for r in records], f"{mean.numerator}/{mean.denominator}",
                       mean_float, checks)


# --- exact transition matrix check -----------------------------------

@dataclass
class TransitionReport:
    n: int
    states: int
    checks: dict[str, bool]
    witnesses: dict[str, object]
    max_row_error: float
    max_col_error: float
    period: int
    stationary_max_deviation: float

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def run_transition_check(n: int) -> TransitionReport:
    """Symmetry, double stochasticity, strong connectivity and aperiodicity."""
    tm = build_transition_matrix(n)
    rows = tm.probs.sum(axis=1)
    cols = tm.probs.sum(axis=0)
    row_err = float(np.abs(rows - 1).max())
    col_err = float(np.abs(cols - 1).max())
    exact_rows_ok = all(sum(r.values()) == 1 for r in tm.exact)
    col_sums: dict[int, object] = {}
    for r in tm.exact:
        for y, p in r.items():
            col_sums[y] = col_sums.get(y, 0) + p
    exact_cols_ok = len(col_sums) == tm.size and all(s == 1 for s in col_sums.values())
    asym = asymmetric_entry(tm)
    connected, unreachable = support_strongly_connected(tm)
    period = support_period(tm) if connected else 0
    pi = stationary_distribution(tm)
    dev = float(np.abs(pi - 1.0 / tm.size).max())
    witnesses = {}
    if asym is not None:
        witnesses["symmetric"] = list(asym)
    if not connected:
        witnesses["strongly connected"] = unreachable
    if row_err > STOCHASTIC_TOL or not exact_rows_ok:
        witnesses["doubly stochastic"] = int(np.abs(rows - 1).argmax())
    elif col_err > STOCHASTIC_TOL or not exact_cols_ok:
        witnesses["doubly stochastic"] = int(np.abs(cols - 1).argmax())
    checks = {
        "symmetric": asym is None,
        "doubly stochastic": (row_err <= STOCHASTIC_TOL and col_err <= STOCHASTIC_TOL
                              and exact_rows_ok and exact_cols_ok),
        "strongly connected": connected,
        "aperiodic": period == 1,
        "uniform stationary": dev <= 1e-9,
    }
    return TransitionReport(n, tm.size, checks, witnesses, row_err, col_err, period, dev)


# --- outputs ------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    for row in rows[1:]:
        header += [k for k in row if k not in header]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in header})
    return buf.getvalue()


def _plotdata(report) -> str:
    if isinstance(report, ScalingReport):
        ycol = "tau" if report.kind == "tau-scaling" else "mean"
        lines = [f"# n {ycol} err fit"]
        for row in report.rows:
            fit = row.get("fit", float("nan"))
            lines.append(f"{row['n']} {row[ycol]!r} {row['err']!r} {fit!r}")
        return "\n".join(lines) + "\n"
    if isinstance(report, ExactReport):
        lines = ["# index aut labellings pi"]
        for i, row in enumerate(report.rows):
            lines.append(f"{i} {row['aut']} {row['labellings']} {row['pi_float']!r}")
        return "\n".join(lines) + "\n"
    if isinstance(report, DistributionReport):
        lines = ["# index pi pi_bar stderr"]
        for i, row in enumerate(report.rows):
            lines.append(f"{i} {row['pi']!r} {row['pi_bar']!r} {row['stderr']!r}")
        return "\n".join(lines) + "\n"
    return ""


def write_outputs(manifest: ExperimentManifest, report, tree_path: str | None = None) -> Path:
    """Write the run directory and return its path."""
    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(_dumps(manifest.to_dict()))
    (out / "results.json").write_text(_dumps(report.as_dict()))
    rows = getattr(report, "rows", None)
    if rows is None:
        rows = [{"check": k, "passed": v} for k, v in report.checks.items()]
    (out / "table.csv").write_text(_table_csv(rows))
    (out / "plotdata.dat").write_text(_plotdata(report))
    if tree_path and getattr(report, "final_tree", None) is not None:
        with open(tree_path, "w") as fp:
            dump_edge_list(report.final_tree, fp)
    return out
