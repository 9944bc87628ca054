"""Synthetic load / wind / solar histories with a known Gaussian dependence.

Used by the experiment scripts and the test-suite. Draws come from numpy's
default generator, not from the package's samplers, so data made here is an
independent reference for them.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .ingest import Dataset

# rank correlations between load, wind speed, solar, and a second load node
DEFAULT_RANK_TARGET = np.array(
    [
        [1.0, -0.3, 0.4, 0.6],
        [-0.3, 1.0, -0.2, -0.1],
        [0.4, -0.2, 1.0, 0.3],
        [0.6, -0.1, 0.3, 1.0],
    ]
)
DEFAULT_NAMES = ("load", "wind", "solar", "load2")


def gaussian_scores(n_obs: int, copula_corr, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c = np.asarray(copula_corr, dtype=float)
    return rng.multivariate_normal(np.zeros(c.shape[0]), c, size=n_obs, method="eigh")


def synthetic_dataset(n_obs: int = 5000, seed: int = 0, rank_target=None, names=DEFAULT_NAMES) -> Dataset:
    """Columns: normal load (MW), Weibull wind speed (m/s), beta solar (p.u.), lognormal load."""
    rank_target = DEFAULT_RANK_TARGET if rank_target is None else np.asarray(rank_target)
    copula_corr = 2.0 * np.sin(np.pi * rank_target / 6.0)
    np.fill_diagonal(copula_corr, 1.0)
    z = gaussian_scores(n_obs, copula_corr, seed)
    u = stats.norm.cdf(z)
    transforms = [
        lambda p: stats.norm.ppf(p, loc=1200.0, scale=180.0),
        lambda p: stats.weibull_min.ppf(p, 2.1, scale=8.5),
        lambda p: stats.beta.ppf(p, 2.0, 3.5),
        lambda p: stats.lognorm.ppf(p, 0.25, scale=400.0),
    ]
    cols = [transforms[j % len(transforms)](u[:, j]) for j in range(u.shape[1])]
    return Dataset(tuple(names[: u.shape[1]]), np.column_stack(cols))
