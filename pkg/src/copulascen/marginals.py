"""Empirical one-dimensional marginals.

Sample ``i`` of ``n`` (sorted, 1-based) sits at plotting position
``(i - 0.5) / n``; the CDF and quantile interpolate linearly between these
knots and clamp outside the observed range, so no tail is ever invented.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class EmpiricalMarginal:
    name: str
    sorted_values: np.ndarray
    # collapsed knots for the CDF: unique values and the mean position of each tie block
    _knots_x: np.ndarray = field(init=False, repr=False, compare=False)
    _knots_u: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.array(self.sorted_values, dtype=float, copy=True)
        if values.ndim != 1 or values.size < 2:
            raise DataError(f"marginal {self.name!r} needs at least 2 samples")
        if not np.isfinite(values).all():
            raise DataError(f"marginal {self.name!r} has non-finite samples")
        if np.any(np.diff(values) < 0):
            raise DataError(f"marginal {self.name!r}: sorted_values must be non-decreasing")
        values.setflags(write=False)
        object.__setattr__(self, "sorted_values", values)

        u = self.plotting_positions
        knots_x, start, counts = np.unique(values, return_index=True, return_counts=True)
        knots_u = np.add.reduceat(u, start) / counts
        knots_x.setflags(write=False)
        knots_u.setflags(write=False)
        object.__setattr__(self, "_knots_x", knots_x)
        object.__setattr__(self, "_knots_u", knots_u)

    @property
    def n(self) -> int:
        return self.sorted_values.size

    @property
    def plotting_positions(self) -> np.ndarray:
        n = self.n
        return (np.arange(1, n + 1) - 0.5) / n

    @property
    def min(self) -> float:
        return float(self.sorted_values[0])

    @property
    def max(self) -> float:
        return float(self.sorted_values[-1])

    def cdf(self, x):
        return cdf(self, x)

    def quantile(self, u):
        return quantile(self, u)

    def pit(self, samples):
        return pit(self, samples)


def fit_empirical(name: str, samples) -> EmpiricalMarginal:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise DataError(f"marginal {name!r}: need at least 2 samples, got {samples.size}")
    if not np.isfinite(samples).all():
        raise DataError(f"marginal {name!r}: samples must be finite")
    return EmpiricalMarginal(name, np.sort(samples, kind="stable"))


def cdf(m: EmpiricalMarginal, x):
    """Interpolated CDF. Below the smallest sample it is 0, above the largest 1.

    A value equal to a tied block of samples maps to the block's mean
    plotting position. Scalars in, float out; arrays in, arrays out.
    """
    xa = np.asarray(x, dtype=float)
    if not np.isfinite(xa).all():
        raise DataError("cdf argument must be finite")
    out = np.interp(xa, m._knots_x, m._knots_u)
    out = np.where(xa < m._knots_x[0], 0.0, out)
    out = np.where(xa > m._knots_x[-1], 1.0, out)
    return float(out) if out.ndim == 0 else out


def quantile(m: EmpiricalMarginal, u):
    """Inverse of the interpolated CDF, clamped to ``[min, max]`` of the samples."""
    ua = np.asarray(u, dtype=float)
    if np.isnan(ua).any() or (ua < 0).any() or (ua > 1).any():
        raise DataError("quantile argument must lie in [0, 1]")
    # np.interp clamps to the end values outside the knot range
    out = np.interp(ua, m.plotting_positions, m.sorted_values)
    return float(out) if out.ndim == 0 else out


def pit(m: EmpiricalMarginal, samples) -> np.ndarray:
    return np.atleast_1d(cdf(m, np.asarray(samples, dtype=float)))
