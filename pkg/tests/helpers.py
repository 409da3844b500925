"""Shared random configuration generators for the test suite."""

import math

import numpy as np

from sparseci.coverage import ETA_GT_SUM, ETA_MID, ETA_SMALL, breakpoints

REGIMES = (ETA_GT_SUM, ETA_MID, ETA_SMALL)
_ETA_FACTOR = {ETA_GT_SUM: (1.02, 3.0), ETA_MID: (0.5, 1.0), ETA_SMALL: (0.05, 0.49)}


def random_box_config(rng, regime, n_range=(1.0, 5.0)):
    """(n, eta, a, b) with a, b on the 1/sqrt(n) scale and eta placed in ``regime``."""
    n = int(round(10 ** rng.uniform(*n_range)))
    u = 1.0 / math.sqrt(n)
    a, b = u * rng.uniform(0.1, 4.0, size=2)
    lo, hi = _ETA_FACTOR[regime]
    eta = (a + b) * rng.uniform(lo, hi)
    return n, float(eta), float(a), float(b)


def random_theta(rng, eta, a, b, n):
    """A theta near a random breakpoint, so every branch gets exercised."""
    pts = breakpoints(eta, a, b) + [0.0]
    return float(rng.choice(pts) + rng.normal(scale=0.7 / math.sqrt(n)))


def mc_configs(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n, eta, a, b = random_box_config(rng, REGIMES[i % 3], n_range=(1.0, 4.0))
        out.append((n, eta, a, b, random_theta(rng, eta, a, b, n)))
    return out
