"""Reference computations that share no code with the package.

Each oracle re-derives a quantity from first principles with plain loops,
direct search or enumeration so that it can check the vectorised Newton
fitter, the sandwich formula and the resamplers independently.
"""

import itertools
import math

import numpy as np


def loglik_rows(beta, d, x):
    """Per-row summation of the Bernoulli log-likelihood in pure Python."""
    total = 0.0
    for di, xi in zip(d, x):
        eta = beta[0] + sum(b * v for b, v in zip(beta[1:], xi))
        # log(1 + e^eta) evaluated without overflow
        if eta > 0:
            log1pexp = eta + math.log1p(math.exp(-eta))
        else:
            log1pexp = math.log1p(math.exp(eta))
        total += di * eta - log1pexp
    return total


def _loglik_vec(beta, d, xt):
    eta = xt @ beta
    return float(np.sum(d * eta) - np.sum(np.maximum(eta, 0) + np.log1p(np.exp(-np.abs(eta)))))


def pattern_search_mle(d, x, start_step=1.0, min_step=1e-10, max_evals=500_000):
    """Maximise the log-likelihood by coarse-to-fine compass search.

    Only function values are used: each coordinate is probed at +/- step and
    the step is halved when no probe improves.
    """
    d = np.asarray(d, float)
    xt = np.column_stack([np.ones(len(d)), np.asarray(x, float).reshape(len(d), -1)])
    k = xt.shape[1]
    beta = np.zeros(k)
    best = _loglik_vec(beta, d, xt)
    step, evals = start_step, 0
    while step > min_step and evals < max_evals:
        improved = False
        for j in range(k):
            for sign in (1.0, -1.0):
                trial = beta.copy()
                trial[j] += sign * step
                val = _loglik_vec(trial, d, xt)
                evals += 1
                if val > best:
                    beta, best, improved = trial, val, True
                    # keep stepping in the same direction while it helps
                    while True:
                        trial = beta.copy()
                        trial[j] += sign * step
                        val = _loglik_vec(trial, d, xt)
                        evals += 1
                        if val > best:
                            beta, best = trial, val
                        else:
                            break
                    break
        if not improved:
            step /= 2.0
    return beta


def sandwich_rows(beta, d, x):
    """Sandwich covariance assembled row by row with explicit loops."""
    k = len(beta)
    bread = [[0.0] * k for _ in range(k)]
    meat = [[0.0] * k for _ in range(k)]
    for di, xi in zip(d, x):
        row = [1.0] + list(xi)
        eta = sum(b * v for b, v in zip(beta, row))
        p = 1.0 / (1.0 + math.exp(-eta))
        r = di - p
        for a in range(k):
            for b in range(k):
                bread[a][b] += p * (1.0 - p) * row[a] * row[b]
                meat[a][b] += r * r * row[a] * row[b]
    inv = np.linalg.inv(np.array(bread))
    return inv @ np.array(meat) @ inv


def proposed_outcome_distribution(case_ids, noncase_ids, m):
    """Exact distribution of the stacked source-id tuple of one replicate.

    Enumerates every equally likely random outcome: ordered case draws,
    ordered non-case draws, and the ordered choice of ``m`` distinct case
    slots to copy.
    """
    n1, r = len(case_ids), len(noncase_ids)
    probs = {}
    outcomes = list(itertools.product(
        itertools.product(case_ids, repeat=n1),
        itertools.product(noncase_ids, repeat=r),
        itertools.permutations(range(n1), m),
    ))
    w = 1.0 / len(outcomes)
    for cases, noncases, slots in outcomes:
        key = tuple(cases) + tuple(noncases) + tuple(cases[s] for s in slots)
        probs[key] = probs.get(key, 0.0) + w
    return probs
