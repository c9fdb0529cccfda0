# %% [markdown]
# # Fitting a case-cohort sample
#
# Simulate a cohort, draw a 20% subcohort plus all cases, and fit the
# stacked logistic model. Cases that also land in the subcohort appear
# twice, once as a case and once as a subcohort member.

# %%
import numpy as np

from casecohort import (
    bootstrap_variance,
    build_stacked,
    fit_logistic,
    generate_cohort,
    default_params,
    robust_covariance,
    sample_case_cohort,
)
from casecohort import streams

params = default_params()
cohort = generate_cohort(2000, params, seed=1)
sample = sample_case_cohort(cohort, 0.2, streams.generator(1, 1))
print(f"cases {sample.n1}, subcohort {sample.n0}, duplicated {sample.m}")

# %%
stacked = build_stacked(cohort, sample)
fit = fit_logistic(stacked)
robust = robust_covariance(fit, stacked)
print("estimates ", np.round(fit.beta, 4))
print("robust SE ", np.round(robust.se, 4))

# %% [markdown]
# The slopes estimate log risk ratios. The intercept does not estimate the
# cohort baseline risk, since the subcohort fixes the case to control mix.

# %%
for strategy in ("naive", "proposed"):
    res = bootstrap_variance(sample, cohort, B=1000, strategy=strategy, seed=7)
    print(f"{strategy:>9} SE", np.round(res.se, 4))
