# %% [markdown]
# # Calibrating the generator
#
# The intercept of the outcome model is solved so that the cohort event
# rate hits a target. The x1 model intercept is solved for a target
# prevalence. Both use exact expectations, so no random draws are needed.

# %%
import numpy as np

from casecohort.simgen import (
    SimParams,
    calibrate_intercept,
    marginal_event_rate,
    default_params,
    x1_prevalence,
)

params = default_params()
print("beta0", params.beta[0], "gamma0", params.gamma[0])
print("event rate", marginal_event_rate(params), "Pr(x1=1)", x1_prevalence(params))
print("expected duplicates at n=2000, 20%:", 400 * marginal_event_rate(params))

# %% [markdown]
# With all slopes at zero the intercept is just the log of the target.

# %%
null = SimParams(beta=(0.0, 0.0, 0.0, 0.0))
print(calibrate_intercept(null, 0.1535), np.log(0.1535))

# %% [markdown]
# A lower x1 prevalence widens the sampling spread of the x1 slope.

# %%
for rate in (0.095, 0.105, 0.115, 0.125):
    p = default_params(x1_rate=rate)
    print(rate, round(p.gamma[0], 4), round(p.beta[0], 4))
