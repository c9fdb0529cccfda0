"""Monte Carlo evaluation of the three standard-error estimators.

Each simulation generates a cohort, draws a case-cohort sample, fits the
stacked logistic regression and computes robust, naive-bootstrap and
proposed-bootstrap standard errors. Wald intervals from each are checked
against the true log risk ratios.

Streams: simulation ``s`` on attempt ``a`` uses ``(seed, s, a, purpose)``
with purpose 0 for the cohort, 1 for subcohort sampling, 2 for the naive
bootstrap and 3 for the proposed bootstrap. Results are therefore identical
for any number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import streams
from .design import build_stacked, sample_case_cohort
from .errors import AggregationError, ComputationError, ConfigError, ContractViolation
from .model import MAX_ITER, TOL, fit_logistic, robust_covariance, wald_ci
from .resampling import bootstrap_variance
from .simgen import SimParams, generate_cohort, default_params

__all__ = [
    "ScenarioConfig",
    "SimulationOutcome",
    "CoefficientSummary",
    "StudyReport",
    "METHODS",
    "coverage",
    "run_simulation",
    "run_scenario",
    "summarize",
]

METHODS = ("robust", "boot_naive", "boot_proposed")
# a single simulation may fail this many times before the scenario aborts
_MAX_ATTEMPTS = 100
FAILURE_RATE_LIMIT = 0.01


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 2000
    subcohort_fraction: float = 0.2
    n_sims: int = 10_000
    B: int = 2000
    sim_params: SimParams = field(default_factory=default_params)
    master_seed: int = 0
    level: float = 0.95
    duplicates_with_replacement: bool = False
    max_iter: int = MAX_ITER
    tol: float = TOL

    def problems(self) -> list:
        out = []
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            out.append(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.subcohort_fraction <= 1.0:
            out.append(f"fraction must lie in (0, 1], got {self.subcohort_fraction!r}")
        if not isinstance(self.n_sims, (int, np.integer)) or self.n_sims < 1:
            out.append(f"n_sims must be at least 1, got {self.n_sims!r}")
        if not isinstance(self.B, (int, np.integer)) or self.B < 2:
            out.append(f"b must be at least 2, got {self.B!r}")
        if not isinstance(self.master_seed, (int, np.integer)) or self.master_seed < 0:
            out.append(f"seed must be a non-negative integer, got {self.master_seed!r}")
        if not 0.0 < self.level < 1.0:
            out.append(f"level must lie in (0, 1), got {self.level!r}")
        if self.max_iter < 1:
            out.append("max_iter must be positive")
        if not self.tol > 0:
            out.append("tol must be positive")
        out.extend(self.sim_params.problems())
        return out

    def validate(self) -> "ScenarioConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self


@dataclass(frozen=True)
class SimulationOutcome:
    index: int
    failed_attempts: int
    beta_hat: np.ndarray
    se_robust: np.ndarray
    se_boot_naive: np.ndarray
    se_boot_proposed: np.ndarray
    n1: int
    n0: int
    m: int
    bootstrap_redraws: int

    def se(self, method: str) -> np.ndarray:
        return getattr(self, "se_" + method)


@dataclass(frozen=True)
class CoefficientSummary:
    name: str
    true_value: float
    mean_estimate: float
    empirical_sd: float
    mean_se_robust: float
    mean_se_boot_naive: float
    mean_se_boot_proposed: float
    cp_robust: float
    cp_boot_naive: float
    cp_boot_proposed: float


@dataclass(frozen=True)
class StudyReport:
    n: int
    subcohort_fraction: float
    n_sims: int
    B: int
    master_seed: int
    coefficients: tuple
    mean_duplicates: float
    failed_simulations: int
    bootstrap_redraws: int
    outcomes: tuple = field(default=(), compare=False, repr=False)

    def coefficient(self, name: str) -> CoefficientSummary:
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)


def coverage(hits) -> float:
    """Fraction of intervals that contained the true value."""
    hits = np.asarray(hits, dtype=bool)
    if hits.size == 0:
        raise ContractViolation("coverage needs at least one interval")
    return float(hits.mean())


def run_simulation(config: ScenarioConfig, s: int) -> SimulationOutcome:
    """Run simulation ``s``, redrawing the whole dataset after a failed fit."""
    seed = config.master_seed
    fit_opts = {"max_iter": config.max_iter, "tol": config.tol}
    last_error = None
    for attempt in range(_MAX_ATTEMPTS):
        cohort = generate_cohort(config.n, config.sim_params, streams.derive(seed, s, attempt, 0))
        sample = sample_case_cohort(
            cohort, config.subcohort_fraction, streams.generator(seed, s, attempt, 1)
        )
        try:
            if sample.n1 == 0 or sample.n0 == 0:
                raise ComputationError("empty case sample or subcohort")
            stacked = build_stacked(cohort, sample)
            fit = fit_logistic(stacked, **fit_opts)
            if not fit.converged:
                raise ComputationError("fit did not converge")
            robust = robust_covariance(fit, stacked)
            boots = {
                strategy: bootstrap_variance(
                    sample,
                    cohort,
                    config.B,
                    strategy,
                    fit_opts,
                    seed=streams.derive(seed, s, attempt, purpose),
                    duplicates_with_replacement=config.duplicates_with_replacement,
                )
                for strategy, purpose in (("naive", 2), ("proposed", 3))
            }
        except (ComputationError, ContractViolation) as exc:
            last_error = exc
            continue
        return SimulationOutcome(
            index=s,
            failed_attempts=attempt,
            beta_hat=np.asarray(fit.beta),
            se_robust=robust.se,
            se_boot_naive=boots["naive"].se,
            se_boot_proposed=boots["proposed"].se,
            n1=sample.n1,
            n0=sample.n0,
            m=sample.m,
            bootstrap_redraws=sum(b.failed_redraws for b in boots.values()),
        )
    raise AggregationError(
        f"simulation {s} failed {_MAX_ATTEMPTS} times; last error: {last_error}"
    )


def summarize(
    config: ScenarioConfig,
    outcomes,
    interval: Callable = wald_ci,
) -> StudyReport:
    """Fold per-simulation outcomes into Table-1 style aggregates."""
    outcomes = tuple(sorted(outcomes, key=lambda o: o.index))
    if not outcomes:
        raise ContractViolation("no simulation outcomes to summarize")
    truth = np.asarray(config.sim_params.beta)
    est = np.vstack([o.beta_hat for o in outcomes])
    k = est.shape[1]
    coefs = []
    for j in range(k):
        se = {m: np.array([o.se(m)[j] for o in outcomes]) for m in METHODS}
        cp = {}
        for m in METHODS:
            hits = []
            for b, e in zip(est[:, j], se[m]):
                lo, hi = interval(float(b), float(e), config.level)
                hits.append(lo <= truth[j] <= hi)
            cp[m] = coverage(hits)
        coefs.append(
            CoefficientSummary(
                name=f"beta{j}",
                true_value=float(truth[j]),
                mean_estimate=float(est[:, j].mean()),
                empirical_sd=float(est[:, j].std(ddof=1)) if len(outcomes) > 1 else 0.0,
                mean_se_robust=float(se["robust"].mean()),
                mean_se_boot_naive=float(se["boot_naive"].mean()),
                mean_se_boot_proposed=float(se["boot_proposed"].mean()),
                cp_robust=cp["robust"],
                cp_boot_naive=cp["boot_naive"],
                cp_boot_proposed=cp["boot_proposed"],
            )
        )
    return StudyReport(
        n=int(config.n),
        subcohort_fraction=float(config.subcohort_fraction),
        n_sims=len(outcomes),
        B=int(config.B),
        master_seed=int(config.master_seed),
        coefficients=tuple(coefs),
        mean_duplicates=float(np.mean([o.m for o in outcomes])),
        failed_simulations=int(sum(o.failed_attempts for o in outcomes)),
        bootstrap_redraws=int(sum(o.bootstrap_redraws for o in outcomes)),
        outcomes=outcomes,
    )


def run_scenario(
    config: ScenarioConfig,
    progress: Optional[Callable[[int, int], None]] = None,
    threads: int = 1,
    interval: Callable = wald_ci,
) -> StudyReport:
    """Run every simulation of a scenario and aggregate the results.

    Parameters
    ----------
    config : ScenarioConfig
    progress : callable, optional
        Called as ``progress(done, total)`` after each simulation, in
        simulation order.
    threads : int
        Number of worker threads. Does not affect the result.
    interval : callable
        ``interval(estimate, se, level) -> (lower, upper)``; Wald by default.
    """
    config.validate()
    if threads < 1:
        raise ContractViolation("threads must be at least 1")
    total = int(config.n_sims)
    outcomes = []

    def collect(results):
        for o in results:
            outcomes.append(o)
            if progress is not None:
                progress(len(outcomes), total)

    if threads == 1:
        collect(run_simulation(config, s) for s in range(total))
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            collect(ex.map(lambda s: run_simulation(config, s), range(total)))
    failed = sum(o.failed_attempts for o in outcomes)
    if failed > FAILURE_RATE_LIMIT * total:
        raise AggregationError(
            f"{failed} failed simulation attempts exceed {FAILURE_RATE_LIMIT:.0%} of {total}"
        )
    return summarize(config, outcomes, interval)
