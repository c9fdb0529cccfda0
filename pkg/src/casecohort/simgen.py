"""Synthetic cohorts with a log-link binary outcome.

Each participant has

* ``z1 ~ Bernoulli(p_z1)`` and ``z2 ~ N(0, 1)``,
* ``x1 ~ Bernoulli(expit(g0 + g1*z1 + g2*z2))``,
* a three-category covariate coded as dummies ``x2`` (prob. ``q2``) and
  ``x3`` (prob. ``q3``),
* ``y ~ Bernoulli(exp(b0 + b1*x1 + b2*x2 + b3*x3))``.

The slopes ``b1..b3`` are therefore log risk ratios. The intercepts ``b0``
and ``g0`` are usually calibrated to a target event rate and a target
prevalence of ``x1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import brentq
from scipy.special import expit

from . import streams
from .design import Cohort
from .errors import CalibrationError, ContractViolation, ModelValidityError

__all__ = [
    "SimParams",
    "DEFAULT_SLOPES",
    "DEFAULT_TARGET_RATE",
    "DEFAULT_X1_RATE",
    "cell_probabilities",
    "generate_cohort",
    "x1_prevalence",
    "marginal_event_rate",
    "calibrate_intercept",
    "calibrate_x1_intercept",
    "default_params",
]

DEFAULT_SLOPES = (0.96, -0.28, -0.39)
# 61.4 expected duplicates out of a 400-member subcohort
DEFAULT_TARGET_RATE = 61.4 / 400
DEFAULT_X1_RATE = 0.115
DEFAULT_GAMMA = (0.0, 1.0, 0.5)

_GH_NODES = 60
CHUNK_SIZE = 1 << 14


@dataclass(frozen=True)
class SimParams:
    beta: tuple = (np.log(DEFAULT_TARGET_RATE), *DEFAULT_SLOPES)
    gamma: tuple = DEFAULT_GAMMA
    p_z1: float = 0.10
    q2: float = 0.16
    q3: float = 0.48

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        structural = self.problems(cells=False)
        if structural:
            raise ModelValidityError("; ".join(structural))

    def problems(self, cells: bool = True) -> list:
        """Every violated constraint, including event probabilities above 1."""
        out = []
        if len(self.beta) != 4:
            out.append("beta must have 4 entries (b0, b1, b2, b3)")
        if len(self.gamma) != 3:
            out.append("gamma must have 3 entries (g0, g1, g2)")
        if not 0.0 <= self.p_z1 <= 1.0:
            out.append(f"p_z1 must lie in [0, 1], got {self.p_z1}")
        if self.q2 < 0 or self.q3 < 0 or self.q2 + self.q3 > 1:
            out.append(f"need q2, q3 >= 0 and q2 + q3 <= 1, got q2={self.q2}, q3={self.q3}")
        if cells and not out:
            top = cell_probabilities(self).max()
            if top > 1.0:
                out.append(
                    f"event probability {top:.6g} exceeds 1 for some covariate "
                    "pattern; lower beta0"
                )
        return out

    def validate(self) -> "SimParams":
        problems = self.problems()
        if problems:
            raise ModelValidityError("; ".join(problems))
        return self

    def with_beta0(self, beta0: float) -> "SimParams":
        return replace(self, beta=(beta0, *self.beta[1:]))

    def with_gamma0(self, gamma0: float) -> "SimParams":
        return replace(self, gamma=(gamma0, *self.gamma[1:]))


def _category_probs(params):
    # categories: reference, x2 = 1, x3 = 1
    return np.array([1.0 - params.q2 - params.q3, params.q2, params.q3])


def cell_probabilities(params: SimParams) -> np.ndarray:
    """Event probability for ``x1`` in {0, 1} (rows) by category (columns)."""
    b0, b1, b2, b3 = params.beta
    cat = np.array([0.0, b2, b3])
    return np.exp(b0 + np.array([0.0, b1])[:, None] + cat[None, :])


def x1_prevalence(params: SimParams) -> float:
    """``Pr(X1 = 1)`` with the normal covariate integrated by Gauss-Hermite."""
    g0, g1, g2 = params.gamma
    nodes, weights = hermegauss(_GH_NODES)
    weights = weights / np.sqrt(2.0 * np.pi)
    by_z1 = [float(weights @ expit(g0 + g1 * z1 + g2 * nodes)) for z1 in (0.0, 1.0)]
    return (1.0 - params.p_z1) * by_z1[0] + params.p_z1 * by_z1[1]


def marginal_event_rate(params: SimParams) -> float:
    """``E[exp(b0 + b1*X1 + b2*X2 + b3*X3)]`` over the covariate distribution."""
    params.validate()
    px1 = x1_prevalence(params)
    cells = cell_probabilities(params)
    return float(_category_probs(params) @ ((1.0 - px1) * cells[0] + px1 * cells[1]))


def calibrate_intercept(params: SimParams, target_rate: float) -> float:
    """Outcome intercept ``b0`` giving marginal event rate ``target_rate``.

    The rate is ``exp(b0)`` times a factor free of ``b0``, so the root is
    found in closed form. Raises :class:`CalibrationError` when the root would
    push some covariate pattern's event probability above 1.
    """
    if not 0.0 < target_rate < 1.0:
        raise ContractViolation(f"target_rate must lie in (0, 1), got {target_rate}")
    b1, b2, b3 = params.beta[1:]
    px1 = x1_prevalence(params)
    cat = np.exp(np.array([0.0, b2, b3]))
    factor = float(_category_probs(params) @ cat) * ((1.0 - px1) + px1 * np.exp(b1))
    beta0 = float(np.log(target_rate) - np.log(factor))
    top = beta0 + max(0.0, b1) + max(0.0, b2, b3)
    if top > 0.0:
        raise CalibrationError(
            f"target rate {target_rate} needs beta0 = {beta0:.6g}, which gives an "
            f"event probability of {np.exp(top):.6g} > 1"
        )
    return beta0


def calibrate_x1_intercept(params: SimParams, target_prevalence: float) -> float:
    """Intercept ``g0`` of the ``x1`` model giving ``Pr(X1 = 1) = target_prevalence``."""
    if not 0.0 < target_prevalence < 1.0:
        raise ContractViolation(
            f"target_prevalence must lie in (0, 1), got {target_prevalence}"
        )

    def gap(g0):
        return x1_prevalence(params.with_gamma0(g0)) - target_prevalence

    try:
        return float(brentq(gap, -50.0, 50.0, xtol=1e-13, rtol=1e-15))
    except ValueError as exc:
        raise CalibrationError(str(exc)) from None


def default_params(
    target_rate: float = DEFAULT_TARGET_RATE,
    x1_rate: float = DEFAULT_X1_RATE,
    gamma1: float = DEFAULT_GAMMA[1],
    gamma2: float = DEFAULT_GAMMA[2],
    beta=DEFAULT_SLOPES,
) -> SimParams:
    """Simulation parameters with both intercepts calibrated."""
    start = SimParams(beta=(np.log(target_rate) - 2.0, *beta), gamma=(0.0, gamma1, gamma2))
    params = start.with_gamma0(calibrate_x1_intercept(start, x1_rate))
    return params.with_beta0(calibrate_intercept(params, target_rate))


def generate_cohort(n: int, params: SimParams, seed: streams.SeedLike) -> Cohort:
    """Simulate ``n`` participants with ids ``0..n-1``.

    The cohort is built in chunks of :data:`CHUNK_SIZE` participants, chunk
    ``c`` drawing from ``streams.generator(seed, c)``.
    """
    if n < 0:
        raise ContractViolation("n must be non-negative")
    params.validate()
    g0, g1, g2 = params.gamma
    b0, b1, b2, b3 = params.beta
    cat_cdf = np.cumsum(_category_probs(params))
    ys, xs, zs = [], [], []
    for c, start in enumerate(range(0, n, CHUNK_SIZE)):
        size = min(CHUNK_SIZE, n - start)
        rng = streams.generator(seed, c)
        z1 = (rng.random(size) < params.p_z1).astype(float)
        z2 = rng.standard_normal(size)
        x1 = (rng.random(size) < expit(g0 + g1 * z1 + g2 * z2)).astype(float)
        cat = np.searchsorted(cat_cdf, rng.random(size), side="right")
        cat = np.minimum(cat, 2)
        x2 = (cat == 1).astype(float)
        x3 = (cat == 2).astype(float)
        prob = np.exp(b0 + b1 * x1 + b2 * x2 + b3 * x3)
        if (prob > 1.0).any():
            raise ModelValidityError("event probability exceeds 1")
        y = (rng.random(size) < prob).astype(np.int8)
        ys.append(y)
        xs.append(np.column_stack([x1, x2, x3]))
        zs.append(np.column_stack([z1, z2]))
    if n == 0:
        return Cohort(np.arange(0), np.zeros(0, np.int8), np.zeros((0, 3)), np.zeros((0, 2)))
    return Cohort(
        ids=np.arange(n),
        y=np.concatenate(ys),
        x=np.vstack(xs),
        z=np.vstack(zs),
    )
