"""Pseudo-likelihood logistic regression for stacked case-cohort data.

Cases (``d = 1``) and subcohort members (``d = 0``) are stacked into one
dataset and an ordinary logistic regression is fitted to it. Participants
that are both a case and a subcohort member appear twice, once with each
label. The slope coefficients estimate log risk ratios; the intercept does
not estimate anything of interest.

Two closed-form covariance estimators are provided: the inverse observed
information (``model``) and the sandwich ``A^-1 B A^-1`` that treats every
stacked row as an independent unit (``robust``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, ndtri

from .errors import ContractViolation, SeparationError

__all__ = [
    "StackedDataset",
    "FitResult",
    "CovarianceEstimate",
    "log_likelihood",
    "score",
    "fit_logistic",
    "fit_logistic_batch",
    "robust_covariance",
    "model_covariance",
    "wald_ci",
    "MAX_ITER",
    "TOL",
    "DIVERGENCE_NORM",
]

MAX_ITER = 50
TOL = 1e-8
# |beta| beyond this is treated as divergence towards a separated solution
DIVERGENCE_NORM = 30.0
_MAX_HALVINGS = 40
_SINGULAR_RCOND = 1e-12
_STEP_TOL = 1e-3

COVARIANCE_METHODS = ("model", "robust", "boot_naive", "boot_proposed")


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StackedDataset:
    """Rows of (indicator ``d``, covariates ``x``, ``source_id``).

    Parameters
    ----------
    d : array_like of int, shape (n,)
        1 for case-sample rows, 0 for subcohort rows.
    x : array_like of float, shape (n, p)
        Covariates without the intercept column. ``p`` may be 0 for
        intercept-only models.
    source_id : array_like, shape (n,), optional
        Participant identifier of each row. Defaults to the row number.
    """

    d: np.ndarray
    x: np.ndarray
    source_id: np.ndarray = field(default=None)

    def __post_init__(self):
        d = np.asarray(self.d)
        x = np.asarray(self.x, dtype=float)
        if d.ndim != 1:
            raise ContractViolation("d must be one-dimensional")
        if x.ndim == 1 and d.size == x.size:
            x = x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[0] != d.shape[0]:
            raise ContractViolation(
                f"x must have shape (n, p) with n = {d.shape[0]}, got {x.shape}"
            )
        if d.size and not np.isin(d, (0, 1)).all():
            raise ContractViolation("d must contain only 0 and 1")
        if not np.isfinite(x).all():
            raise ContractViolation("covariates must be finite")
        sid = np.arange(d.size) if self.source_id is None else np.asarray(self.source_id)
        if sid.shape != d.shape:
            raise ContractViolation("source_id must have one entry per row")
        object.__setattr__(self, "d", _frozen(d.astype(np.int8)))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "source_id", _frozen(sid))

    @property
    def n(self) -> int:
        return int(self.d.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    def design_matrix(self) -> np.ndarray:
        """Covariates with a leading column of ones."""
        return np.column_stack([np.ones(self.n), self.x])

    def duplicated_ids(self) -> np.ndarray:
        """Source ids that occur on more than one row."""
        ids, counts = np.unique(self.source_id, return_counts=True)
        return ids[counts > 1]

    def check_duplication(self) -> int:
        """Validate the stacking rule and return the number of duplicated ids.

        An id may appear at most twice, and if twice then once with ``d = 1``
        and once with ``d = 0``. Bootstrap replicates deliberately break this
        rule, so it is not enforced on construction.
        """
        ids, inverse, counts = np.unique(
            self.source_id, return_inverse=True, return_counts=True
        )
        if (counts > 2).any():
            bad = ids[counts > 2][0]
            raise ContractViolation(f"source_id {bad!r} appears more than twice")
        cases_per_id = np.bincount(inverse, weights=self.d, minlength=ids.size)
        twice = counts == 2
        if (cases_per_id[twice] != 1).any():
            bad = ids[twice & (cases_per_id != 1)][0]
            raise ContractViolation(
                f"source_id {bad!r} appears twice without one case and one subcohort row"
            )
        return int(twice.sum())


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    converged: bool
    iterations: int
    neg_inv_hessian: np.ndarray
    score_norm: float = np.nan

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen(self.beta))
        object.__setattr__(self, "neg_inv_hessian", _frozen(self.neg_inv_hessian))


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    method: str

    def __post_init__(self):
        if self.method not in COVARIANCE_METHODS:
            raise ContractViolation(f"unknown covariance method {self.method!r}")
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolation("covariance matrix must be square")
        object.__setattr__(self, "matrix", _frozen((m + m.T) / 2))

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.matrix), 0.0, None))


def _check_beta(beta, data):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p + 1,):
        raise ContractViolation(
            f"beta must have length p + 1 = {data.p + 1}, got shape {beta.shape}"
        )
    return beta


def _weights(weights, n):
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or (w < 0).any():
        raise ContractViolation("weights must be non-negative with one entry per row")
    return w


def log_likelihood(beta, data: StackedDataset, weights=None) -> float:
    """Bernoulli log-likelihood ``sum(d * eta - log(1 + exp(eta)))``."""
    beta = _check_beta(beta, data)
    w = _weights(weights, data.n)
    eta = data.design_matrix() @ beta
    return float(np.sum(w * (data.d * eta - np.logaddexp(0.0, eta))))


def score(beta, data: StackedDataset, weights=None) -> np.ndarray:
    """Gradient of :func:`log_likelihood` with respect to ``beta``."""
    beta = _check_beta(beta, data)
    w = _weights(weights, data.n)
    xt = data.design_matrix()
    return xt.T @ (w * (data.d - expit(xt @ beta)))


def _information(xt, w, beta):
    p = expit(xt @ beta)
    return (xt * (w * p * (1.0 - p))[:, None]).T @ xt


def _is_singular(info):
    ev = np.linalg.eigvalsh(info)
    return ev[..., 0] <= _SINGULAR_RCOND * np.maximum(ev[..., -1], np.finfo(float).tiny)


def fit_logistic_batch(xt, d, weights, max_iter: int = MAX_ITER, tol: float = TOL):
    """Fit many frequency-weighted logistic regressions that share a design.

    Newton-Raphson from ``beta = 0`` with step halving whenever the
    log-likelihood fails to increase. Fits are advanced together. A fit
    stops once its score sup-norm is below ``tol`` and its Newton step is
    small; that last full Newton step is still applied, which brings the
    estimate to machine precision at no extra cost.

    Parameters
    ----------
    xt : ndarray, shape (u, k)
        Design matrix including the intercept column.
    d : ndarray, shape (u,)
        Outcome indicator of each design row.
    weights : ndarray, shape (b, u)
        Frequency weight of each design row in each of ``b`` fits.

    Returns
    -------
    beta : ndarray, shape (b, k)
    status : ndarray of int, shape (b,)
        0 converged, 1 iteration limit reached, 2 separated or singular.
    iterations : ndarray of int, shape (b,)
    """
    xt = np.asarray(xt, dtype=float)
    d = np.asarray(d, dtype=float)
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    nb, k = w.shape[0], xt.shape[1]
    beta = np.zeros((nb, k))
    status = np.ones(nb, dtype=np.int8)
    iterations = np.zeros(nb, dtype=np.int64)
    active = np.ones(nb, dtype=bool)

    def loglik(b_, w_):
        eta = b_ @ xt.T
        return np.sum(w_ * (d * eta - np.logaddexp(0.0, eta)), axis=1)

    ll = loglik(beta, w)
    for it in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        b_a, w_a = beta[idx], w[idx]
        prob = expit(b_a @ xt.T)
        grad = (w_a * (d - prob)) @ xt
        info = np.einsum("bu,ui,uj->bij", w_a * prob * (1.0 - prob), xt, xt)
        sing = _is_singular(info)
        if sing.any():
            status[idx[sing]] = 2
            active[idx[sing]] = False
            idx, b_a, w_a, info, grad = idx[~sing], b_a[~sing], w_a[~sing], info[~sing], grad[~sing]
            if idx.size == 0:
                break
        step = np.linalg.solve(info, grad[..., None])[..., 0]
        # a small score with a large Newton step means the estimates are
        # drifting off towards a separated solution
        done = (np.abs(grad).max(axis=1) < tol) & (np.abs(step).max(axis=1) < _STEP_TOL)
        if done.any():
            beta[idx[done]] = b_a[done] + step[done]
            status[idx[done]] = 0
            active[idx[done]] = False
            keep = ~done
            idx, b_a, w_a, grad, step = idx[keep], b_a[keep], w_a[keep], grad[keep], step[keep]
        if it == max_iter or idx.size == 0:
            break
        ll_old = ll[idx]
        slack = 1e-12 * (1.0 + np.abs(ll_old))
        t = np.ones(idx.size)
        new = b_a + step
        ll_new = loglik(new, w_a)
        for _ in range(_MAX_HALVINGS):
            worse = ~(ll_new >= ll_old - slack)
            if not worse.any():
                break
            t[worse] *= 0.5
            new[worse] = b_a[worse] + t[worse, None] * step[worse]
            ll_new[worse] = loglik(new[worse], w_a[worse])
        beta[idx] = new
        ll[idx] = ll_new
        iterations[idx] += 1
        diverged = np.abs(new).max(axis=1) > DIVERGENCE_NORM
        if diverged.any():
            status[idx[diverged]] = 2
            active[idx[diverged]] = False
    return beta, status, iterations


def fit_logistic(
    data: StackedDataset,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
    weights=None,
) -> FitResult:
    """Maximum likelihood fit of the logistic model to stacked data.

    A fit that hits ``max_iter`` is returned with ``converged=False``.
    Separation or a singular information matrix raises
    :class:`~casecohort.errors.SeparationError`.
    """
    w = _weights(weights, data.n)
    pos = w > 0
    n_case = int((data.d[pos] == 1).sum())
    n_ctrl = int((data.d[pos] == 0).sum())
    if n_case == 0 or n_ctrl == 0:
        raise ContractViolation("need at least one row of each outcome class")
    if data.p + 1 > int(pos.sum()):
        raise ContractViolation("more coefficients than rows")
    xt = data.design_matrix()
    beta, status, iters = fit_logistic_batch(xt, data.d, w[None, :], max_iter, tol)
    beta, status = beta[0], int(status[0])
    if status == 2:
        raise SeparationError(
            "information matrix is singular or estimates diverge "
            "(perfect separation or collinear covariates)"
        )
    info = _information(xt, w, beta)
    if _is_singular(info):
        raise SeparationError("information matrix is singular at the final estimate")
    inv = np.linalg.inv(info)
    grad = xt.T @ (w * (data.d - expit(xt @ beta)))
    return FitResult(
        beta=beta,
        converged=status == 0,
        iterations=int(iters[0]),
        neg_inv_hessian=(inv + inv.T) / 2,
        score_norm=float(np.abs(grad).max()),
    )


def model_covariance(fit: FitResult) -> CovarianceEstimate:
    if not fit.converged:
        raise ContractViolation("model covariance requires a converged fit")
    return CovarianceEstimate(fit.neg_inv_hessian, "model")


def robust_covariance(fit: FitResult, data: StackedDataset, weights=None) -> CovarianceEstimate:
    """Sandwich covariance treating each stacked row as an independent unit.

    No small-sample correction is applied. Duplicated participants are
    counted as two independent rows.
    """
    if not fit.converged:
        raise ContractViolation("robust covariance requires a converged fit")
    beta = _check_beta(fit.beta, data)
    w = _weights(weights, data.n)
    xt = data.design_matrix()
    resid = data.d - expit(xt @ beta)
    bread = _information(xt, w, beta)
    if _is_singular(bread):
        raise SeparationError("information matrix is singular")
    scores = xt * resid[:, None]
    meat = (scores * w[:, None]).T @ scores
    half = np.linalg.solve(bread, meat)
    cov = np.linalg.solve(bread, half.T).T
    return CovarianceEstimate(cov, "robust")


def wald_ci(estimate: float, se: float, level: float = 0.95):
    """Two-sided Wald interval ``estimate -/+ z * se``."""
    if not 0.0 < level < 1.0:
        raise ContractViolation(f"level must lie in (0, 1), got {level}")
    if not se >= 0.0:
        raise ContractViolation(f"se must be non-negative, got {se}")
    half = float(ndtri(0.5 + level / 2.0)) * se
    return estimate - half, estimate + half

