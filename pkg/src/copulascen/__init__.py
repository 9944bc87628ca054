"""Scenario generation for correlated load, wind and solar variables.

Empirical marginals are coupled either by an n-dimensional Gaussian copula
(joint normal transform) or by a d-vine of Gaussian pair copulas.
"""

from .dependence import (
    CopulaCorrelationMatrix,
    RankCorrelationMatrix,
    copula_sigma_to_rank,
    nearest_psd,
    rank_to_copula_sigma,
    spearman,
    spearman_matrix,
    to_copula_matrix,
)
from .errors import ConfigError, CopulaScenError, DataError, NotPSDError
from .gaussian_copula import (
    GaussianCopulaModel,
    cholesky,
    h_gauss,
    h_gauss_inv,
    joint_normal_transform,
    sample_bivariate_copula,
    std_normal_cdf,
    std_normal_quantile,
)
from .ingest import Dataset, align_and_clean, load_timeseries_csv, write_dataset_csv
from .marginals import EmpiricalMarginal, cdf, fit_empirical, pit, quantile
from .rng import SeededRng
from .vine import (
    DVineSpec,
    VineStructure,
    build_dvine,
    dvine_from_rank_matrix,
    sample_dvine,
    validate_regular_vine,
)

__version__ = "0.1.0"
