import numpy as np

from casecohort.model import StackedDataset


def random_dataset(rng, n, p, scale=0.8):
    x = rng.normal(size=(n, p))
    beta = rng.normal(scale=scale, size=p + 1)
    eta = beta[0] + x @ beta[1:]
    d = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(int)
    return StackedDataset(d=d, x=x)
