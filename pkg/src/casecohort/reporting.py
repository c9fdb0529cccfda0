"""Text tables and machine-readable CSV for fit and simulation reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields

from .errors import InputError
from .study import CoefficientSummary, StudyReport

__all__ = [
    "COEFFICIENT_METRICS",
    "SCENARIO_METRICS",
    "report_records",
    "write_report_csv",
    "read_report_csv",
    "render_study_table",
    "FitRow",
    "render_fit_table",
    "fit_rows_csv",
]

REPORT_COLUMNS = ("n", "fraction", "n_sims", "b", "seed", "coefficient", "metric", "value")

# metric name in the CSV -> CoefficientSummary attribute
COEFFICIENT_METRICS = {
    "true_value": "true_value",
    "mean": "mean_estimate",
    "sd": "empirical_sd",
    "se_robust": "mean_se_robust",
    "se_boot_naive": "mean_se_boot_naive",
    "se_boot_proposed": "mean_se_boot_proposed",
    "cp_robust": "cp_robust",
    "cp_boot_naive": "cp_boot_naive",
    "cp_boot_proposed": "cp_boot_proposed",
}
SCENARIO_METRICS = {
    "mean_duplicates": float,
    "failed_simulations": int,
    "bootstrap_redraws": int,
}


def _fmt(value) -> str:
    # repr of a float round-trips exactly
    return repr(float(value)) if isinstance(value, float) else str(value)


def report_records(report: StudyReport) -> list:
    """One record per (coefficient, metric), scenario metadata repeated."""
    meta = {
        "n": report.n,
        "fraction": report.subcohort_fraction,
        "n_sims": report.n_sims,
        "b": report.B,
        "seed": report.master_seed,
    }
    out = [
        {**meta, "coefficient": "", "metric": name, "value": getattr(report, name)}
        for name in SCENARIO_METRICS
    ]
    for c in report.coefficients:
        for metric, attr in COEFFICIENT_METRICS.items():
            out.append({**meta, "coefficient": c.name, "metric": metric, "value": getattr(c, attr)})
    return out


def write_report_csv(report: StudyReport, path=None) -> str:
    """Write the report as CSV to ``path`` (if given) and return the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rec in report_records(report):
        writer.writerow([_fmt(rec[c]) for c in REPORT_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_report_csv(path) -> StudyReport:
    """Inverse of :func:`write_report_csv` (per-simulation outcomes are not stored)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InputError(f"{path}: empty report")
    first = rows[0]
    scenario, coefs = {}, {}
    for row in rows:
        metric, name = row["metric"], row["coefficient"]
        if not name:
            scenario[metric] = SCENARIO_METRICS[metric](row["value"])
        else:
            coefs.setdefault(name, {})[COEFFICIENT_METRICS[metric]] = float(row["value"])
    return StudyReport(
        n=int(first["n"]),
        subcohort_fraction=float(first["fraction"]),
        n_sims=int(first["n_sims"]),
        B=int(first["b"]),
        master_seed=int(first["seed"]),
        coefficients=tuple(CoefficientSummary(name=k, **v) for k, v in coefs.items()),
        **scenario,
    )


_STUDY_ROWS = (
    ("Mean", "mean_estimate"),
    ("SE", "empirical_sd"),
    ("SE robust", "mean_se_robust"),
    ("SE boot,naive", "mean_se_boot_naive"),
    ("SE boot,proposed", "mean_se_boot_proposed"),
    ("CP robust", "cp_robust"),
    ("CP boot,naive", "cp_boot_naive"),
    ("CP boot,proposed", "cp_boot_proposed"),
)


def render_study_table(reports, include_intercept: bool = False) -> str:
    """Summary layout with one column per scenario."""
    if isinstance(reports, StudyReport):
        reports = [reports]
    width, label_width = 10, 26
    lines = []

    def row(label, cells):
        lines.append(label.ljust(label_width) + "".join(c.rjust(width) for c in cells))

    row("N", [f"{r.n:,}" for r in reports])
    row("Subcohort size", [f"{100 * r.subcohort_fraction:g}%" for r in reports])
    row("Simulations", [str(r.n_sims) for r in reports])
    row("Bootstrap replicates", [str(r.B) for r in reports])
    row("Mean duplicated samples", [f"{r.mean_duplicates:.1f}" for r in reports])
    names = [c.name for c in reports[0].coefficients]
    for name in names:
        if name == "beta0" and not include_intercept:
            continue
        coefs = [r.coefficient(name) for r in reports]
        lines.append(f"{name} = {coefs[0].true_value:g}")
        for label, attr in _STUDY_ROWS:
            row("  " + label, [f"{getattr(c, attr):.3f}" for c in coefs])
    failed = [r.failed_simulations for r in reports]
    redraws = [r.bootstrap_redraws for r in reports]
    if any(failed) or any(redraws):
        row("Failed simulation attempts", [str(f) for f in failed])
        row("Bootstrap redraws", [str(b) for b in redraws])
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FitRow:
    coefficient: str
    method: str
    estimate: float
    se: float
    lower: float
    upper: float


def render_fit_table(rows, header_lines=()) -> str:
    out = list(header_lines)
    out.append(
        f"{'coefficient':<16}{'method':<16}{'estimate':>12}{'se':>12}{'lower':>12}{'upper':>12}"
    )
    for r in rows:
        out.append(
            f"{r.coefficient:<16}{r.method:<16}{r.estimate:>12.6f}{r.se:>12.6f}"
            f"{r.lower:>12.6f}{r.upper:>12.6f}"
        )
    return "\n".join(out) + "\n"


def fit_rows_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(FitRow)]
    writer.writerow(names)
    for r in rows:
        writer.writerow([_fmt(getattr(r, n)) for n in names])
    return buf.getvalue()
