"""Bootstrap resampling of case-cohort samples.

Two schemes are implemented.

``proposed``
    Resample the ``n1`` cases with replacement, resample the ``n0 - m``
    non-case subcohort members with replacement, then copy ``m`` of the
    resampled cases into the subcohort. Every replicate therefore keeps the
    original number of case/subcohort duplicates.
``naive``
    Resample the case sample and the subcohort independently, each with
    replacement. Duplicates are not tracked.

For speed, :func:`bootstrap_variance` never materialises the replicate
datasets. Each replicate is reduced to frequency weights over the distinct
``(d, x)`` rows of the original stacked data, and all replicates are fitted
together by :func:`~casecohort.model.fit_logistic_batch`. The result is the
same maximum likelihood estimate as fitting the expanded rows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import streams
from .design import CaseCohortSample, Cohort, _stack
from .errors import AggregationError, ContractViolation
from .model import MAX_ITER, TOL, StackedDataset, fit_logistic_batch

__all__ = [
    "STRATEGIES",
    "BootstrapResult",
    "resample_proposed",
    "resample_naive",
    "bootstrap_variance",
]

STRATEGIES = ("proposed", "naive")
REDRAW_BUDGET = 100


@dataclass(frozen=True)
class _Pools:
    case_pos: np.ndarray
    noncase_pos: np.ndarray
    sub_pos: np.ndarray
    m: int

    @classmethod
    def build(cls, sample: CaseCohortSample, cohort: Cohort) -> "_Pools":
        return cls(
            case_pos=cohort.positions(sample.case_ids),
            noncase_pos=cohort.positions(sample.noncase_subcohort_ids()),
            sub_pos=cohort.positions(sample.subcohort_ids),
            m=sample.m,
        )


def _with_replacement(pool, rng):
    if pool.size == 0:
        return pool
    return pool[rng.integers(0, pool.size, size=pool.size)]


def _draw_proposed(pools: _Pools, rng, dup_replace=False):
    cases = _with_replacement(pools.case_pos, rng)
    noncases = _with_replacement(pools.noncase_pos, rng)
    if pools.m:
        picked = rng.choice(cases.size, size=pools.m, replace=dup_replace)
        sub = np.concatenate([noncases, cases[picked]])
    else:
        sub = noncases
    return cases, sub


def _draw_naive(pools: _Pools, rng, dup_replace=False):
    return _with_replacement(pools.case_pos, rng), _with_replacement(pools.sub_pos, rng)


def _check_proposed(sample: CaseCohortSample):
    if sample.m > sample.n1:
        raise ContractViolation("m cannot exceed the number of cases")
    if sample.n1 == 0:
        raise ContractViolation("case sample is empty")
    if sample.n0 == 0:
        raise ContractViolation("subcohort is empty")


def _check_naive(sample: CaseCohortSample):
    if sample.n1 == 0 or sample.n0 == 0:
        raise ContractViolation("case sample and subcohort must both be non-empty")


def resample_proposed(
    sample: CaseCohortSample,
    cohort: Cohort,
    rng: np.random.Generator,
    duplicates_with_replacement: bool = False,
) -> StackedDataset:
    """One duplication-preserving bootstrap replicate.

    The ``m`` copied cases are chosen without replacement from the ``n1``
    case draws unless ``duplicates_with_replacement`` is set. The last ``m``
    subcohort rows are the copies.
    """
    _check_proposed(sample)
    pools = _Pools.build(sample, cohort)
    cases, sub = _draw_proposed(pools, rng, duplicates_with_replacement)
    return _stack(cohort, cases, sub)


def resample_naive(
    sample: CaseCohortSample, cohort: Cohort, rng: np.random.Generator
) -> StackedDataset:
    """One bootstrap replicate resampling cases and subcohort independently."""
    _check_naive(sample)
    pools = _Pools.build(sample, cohort)
    cases, sub = _draw_naive(pools, rng)
    return _stack(cohort, cases, sub)


@dataclass(frozen=True)
class BootstrapResult:
    strategy: str
    replicates: int
    coefficient_draws: np.ndarray
    covariance: np.ndarray
    failed_redraws: int
    separated: int = 0
    not_converged: int = 0

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


class _Compressor:
    """Maps cohort positions to distinct (d, x) design rows."""

    def __init__(self, cohort: Cohort, pools: _Pools):
        rel = np.unique(np.concatenate([pools.case_pos, pools.sub_pos]))
        keys = np.vstack([
            np.column_stack([np.ones(rel.size), cohort.x[rel]]),
            np.column_stack([np.zeros(rel.size), cohort.x[rel]]),
        ])
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        self.d = uniq[:, 0]
        self.xt = np.column_stack([np.ones(uniq.shape[0]), uniq[:, 1:]])
        self.pattern_case = np.full(len(cohort), -1, dtype=np.intp)
        self.pattern_sub = np.full(len(cohort), -1, dtype=np.intp)
        self.pattern_case[rel] = inverse[: rel.size]
        self.pattern_sub[rel] = inverse[rel.size:]

    @property
    def size(self) -> int:
        return int(self.d.size)

    def counts(self, cases, sub) -> np.ndarray:
        rows = np.concatenate([self.pattern_case[cases], self.pattern_sub[sub]])
        return np.bincount(rows, minlength=self.size)


def bootstrap_variance(
    sample: CaseCohortSample,
    cohort: Cohort,
    B: int,
    strategy: str = "proposed",
    fit_opts: Optional[dict] = None,
    seed: streams.SeedLike = 0,
    threads: int = 1,
    duplicates_with_replacement: bool = False,
) -> BootstrapResult:
    """Bootstrap covariance of the logistic regression coefficients.

    Replicate ``k`` on its ``a``-th attempt uses the stream
    ``streams.generator(seed, k, a)``, so results are bit-identical for any
    ``threads``. Replicates whose fit is separated or does not converge are
    redrawn with the next attempt stream; at most ``100 * B`` attempts are
    made in total.

    Parameters
    ----------
    sample, cohort
        The observed case-cohort sample and the participants it refers to.
    B : int
        Number of successful replicates.
    strategy : {"proposed", "naive"}
    fit_opts : dict, optional
        ``max_iter`` and ``tol`` forwarded to the fitter.
    seed : int or SeedSequence
        Root of the per-replicate streams.
    threads : int
        Workers used to generate replicate draws.
    """
    if strategy not in STRATEGIES:
        raise ContractViolation(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if B < 2:
        raise ContractViolation("B must be at least 2")
    if strategy == "proposed":
        _check_proposed(sample)
        draw = _draw_proposed
    else:
        _check_naive(sample)
        draw = _draw_naive
    opts = {"max_iter": MAX_ITER, "tol": TOL, **(fit_opts or {})}
    pools = _Pools.build(sample, cohort)
    comp = _Compressor(cohort, pools)

    def counts_for(jobs):
        out = np.empty((len(jobs), comp.size))
        for i, (k, a) in enumerate(jobs):
            rng = streams.generator(seed, k, a)
            out[i] = comp.counts(*draw(pools, rng, duplicates_with_replacement))
        return out

    draws = np.empty((B, comp.xt.shape[1]))
    attempt = np.zeros(B, dtype=np.int64)
    pending = np.arange(B)
    failed = separated = not_converged = 0
    while pending.size:
        jobs = [(int(k), int(attempt[k])) for k in pending]
        if threads > 1 and len(jobs) > 1:
            chunks = [c for c in np.array_split(np.arange(len(jobs)), threads) if c.size]
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(lambda c: counts_for([jobs[i] for i in c]), chunks))
            weights = np.vstack(parts)
        else:
            weights = counts_for(jobs)
        beta, status, _ = fit_logistic_batch(comp.xt, comp.d, weights, **opts)
        ok = status == 0
        draws[pending[ok]] = beta[ok]
        separated += int((status == 2).sum())
        not_converged += int((status == 1).sum())
        failed += int((~ok).sum())
        pending = pending[~ok]
        attempt[pending] += 1
        if B + failed > REDRAW_BUDGET * B:
            raise AggregationError(
                f"bootstrap redraw budget exhausted after {B + failed} attempts: "
                f"{separated} separated or singular fits, {not_converged} not converged"
            )
    cov = np.cov(draws, rowvar=False, ddof=1).reshape(draws.shape[1], draws.shape[1])
    return BootstrapResult(
        strategy=strategy,
        replicates=B,
        coefficient_draws=draws,
        covariance=(cov + cov.T) / 2,
        failed_redraws=failed,
        separated=separated,
        not_converged=not_converged,
    )
