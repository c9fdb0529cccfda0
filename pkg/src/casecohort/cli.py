"""Command line interface: ``casecohort fit | simulate | calibrate``.

Exit status is 0 on success, 2 for invalid input (arguments, data files,
configuration) and 3 when a computation fails.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_values, config_from_values, params_from_values, DEFAULTS
from .data import read_stacked_csv
from .design import subcohort_size
from .errors import ComputationError, InputError
from .model import fit_logistic, model_covariance, robust_covariance, wald_ci
from .reporting import FitRow, fit_rows_csv, render_fit_table, render_study_table, write_report_csv
from .resampling import bootstrap_variance
from .simgen import DEFAULT_TARGET_RATE, marginal_event_rate, x1_prevalence
from .study import run_scenario

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTATION = 3
THREADS_ENV = "CASECOHORT_THREADS"


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _level(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casecohort",
        description="Log risk ratios and standard errors for case-cohort studies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit stacked case-cohort data from a CSV file")
    fit.add_argument("--data", required=True, help="CSV file with a header row")
    fit.add_argument("--outcome", default="D", help="0/1 case indicator column (default: D)")
    fit.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
    fit.add_argument("--id", dest="id_column", help="participant id column")
    fit.add_argument("--boot", choices=("naive", "proposed", "both", "none"), default="both")
    fit.add_argument("--b", type=_positive, default=2000, help="bootstrap replicates")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--level", type=_level, default=0.95)
    fit.add_argument("--threads", type=_positive)
    fit.add_argument("--out", help="also write the table as CSV to this file")

    sim = sub.add_parser("simulate", help="run a simulation scenario")
    sim.add_argument("--config", required=True, help="key = value scenario file")
    sim.add_argument("--out", help="CSV report path (default: <config>.report.csv)")
    sim.add_argument("--seed", type=int, help="override the seed in the config")
    sim.add_argument("--b", type=_positive, help="override b in the config")
    sim.add_argument("--threads", type=_positive)
    sim.add_argument("--quiet", action="store_true", help="no progress output")

    cal = sub.add_parser("calibrate", help="calibrate the outcome intercept")
    cal.add_argument("--config", help="key = value parameter file (default: built-in)")
    cal.add_argument("--target", type=float, help="marginal event rate")
    return parser


def cmd_fit(args, stdout) -> int:
    covariates = None
    if args.covariates:
        covariates = [c.strip() for c in args.covariates.split(",") if c.strip()]
    boot = {"both": ("naive", "proposed"), "none": ()}.get(args.boot, (args.boot,))
    if "proposed" in boot and not args.id_column:
        raise InputError(
            "the proposed bootstrap needs --id so that duplicated participants "
            "can be identified; use --boot naive or --boot none otherwise"
        )
    data = read_stacked_csv(args.data, args.outcome, covariates, args.id_column)
    if data.has_ids:
        try:
            data.stacked.check_duplication()
        except InputError as exc:
            raise InputError(f"{args.data}: {exc}") from None
    fit = fit_logistic(data.stacked)
    if not fit.converged:
        raise ComputationError(f"fit did not converge in {fit.iterations} iterations")
    threads = args.threads or _default_threads()
    se = {
        "model": model_covariance(fit).se,
        "robust": robust_covariance(fit, data.stacked).se,
    }
    redraws = {}
    for purpose, strategy in enumerate(("naive", "proposed")):
        if strategy in boot:
            res = bootstrap_variance(
                data.sample,
                data.cohort,
                args.b,
                strategy,
                seed=np.random.SeedSequence(args.seed, spawn_key=(purpose,)),
                threads=threads,
            )
            se["boot_" + strategy] = res.se
            redraws[strategy] = res.failed_redraws

    names = ["(intercept)", *data.covariates]
    rows = []
    for j, name in enumerate(names):
        for method, s in se.items():
            lo, hi = wald_ci(float(fit.beta[j]), float(s[j]), args.level)
            rows.append(FitRow(name, method, float(fit.beta[j]), float(s[j]), lo, hi))
    sample = data.sample
    header = [
        "Case-cohort logistic regression (slopes are log risk ratios)",
        f"rows: {data.stacked.n}  cases n1: {sample.n1}  subcohort n0: {sample.n0}  "
        f"duplicated m: {sample.m}",
        f"level: {args.level:g}  iterations: {fit.iterations}"
        + (f"  bootstrap replicates: {args.b}  seed: {args.seed}" if boot else ""),
    ]
    if any(redraws.values()):
        header.append(
            "bootstrap redraws: " + ", ".join(f"{k} {v}" for k, v in redraws.items())
        )
    header.append("")
    stdout.write(render_fit_table(rows, header))
    if args.out:
        Path(args.out).write_text(fit_rows_csv(rows), encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args, stdout, stderr) -> int:
    values = load_values(args.config)
    if args.seed is not None:
        values["seed"] = args.seed
    if args.b is not None:
        values["b"] = args.b
    config = config_from_values(values)
    threads = args.threads or _default_threads()
    step = max(1, config.n_sims // 20)

    def progress(done, total):
        if not args.quiet and (done % step == 0 or done == total):
            stderr.write(f"simulation {done}/{total}\n")
            stderr.flush()

    report = run_scenario(config, progress=progress, threads=threads)
    out = args.out or str(Path(args.config).with_suffix(".report.csv"))
    write_report_csv(report, out)
    stdout.write(render_study_table(report))
    stdout.write(f"\nreport written to {out}\n")
    return EXIT_OK


def cmd_calibrate(args, stdout) -> int:
    values = load_values(args.config) if args.config else {}
    values.pop("beta0", None)
    target = args.target if args.target is not None else values.get("target_rate", DEFAULT_TARGET_RATE)
    values["target_rate"] = target
    params = params_from_values(values)
    n = values.get("n", DEFAULTS["n"])
    fraction = values.get("fraction", DEFAULTS["fraction"])
    rate = marginal_event_rate(params)
    n0 = subcohort_size(n, fraction)
    stdout.write(
        f"beta0 = {params.beta[0]:.10f}\n"
        f"gamma0 = {params.gamma[0]:.10f}\n"
        f"achieved event rate = {rate:.10f}\n"
        f"Pr(x1 = 1) = {x1_prevalence(params):.10f}\n"
        f"expected duplicates at N = {n}, subcohort {fraction:g} (n0 = {n0}) = {n0 * rate:.2f}\n"
    )
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        if args.command == "fit":
            return cmd_fit(args, stdout)
        if args.command == "simulate":
            return cmd_simulate(args, stdout, stderr)
        return cmd_calibrate(args, stdout)
    except InputError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ComputationError as exc:
        stderr.write(f"computation failed: {exc}\n")
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
