"""Gaussian copula primitives and samplers.

Covers the standard normal CDF/quantile, Cholesky factorisation, the
bivariate conditional copula (h-function) and its inverse, two-variable
sampling by conditional inversion, and the n-dimensional joint normal
transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .dependence import CopulaCorrelationMatrix, rank_to_copula_sigma
from .errors import DataError, NotPSDError
from .rng import SeededRng, map_row_blocks

RHO_CLAMP = 1.0 - 1e-12
PIVOT_TOL = 1e-12
# keeps normal scores finite when an intermediate probability rounds to 0 or 1
_P_LO = 5e-324
_P_HI = 1.0 - 2.0**-53


def std_normal_cdf(z):
    z = np.asarray(z, dtype=float)
    if not np.isfinite(z).all():
        raise DataError("std_normal_cdf argument must be finite")
    out = ndtr(z)
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.isnan(p).any() or (p <= 0).any() or (p >= 1).any():
        raise DataError("std_normal_quantile argument must lie in the open interval (0, 1)")
    out = ndtri(p)
    return float(out) if out.ndim == 0 else out


def cholesky(m) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m``.

    Accepts a :class:`CopulaCorrelationMatrix` or a plain symmetric array.
    A pivot at or below 1e-12 means the matrix is not (numerically) positive
    definite and must go through ``nearest_psd`` first.
    """
    a = m.entries if isinstance(m, CopulaCorrelationMatrix) else np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError("cholesky needs a square matrix")
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        pivot = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if not pivot > PIVOT_TOL:
            raise NotPSDError(
                f"matrix is not positive definite (pivot {pivot:.3g} at row {j}); "
                "apply nearest_psd repair first"
            )
        L[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (a[i, j] - np.dot(L[i, :j], L[j, :j])) / L[j, j]
    return L


@dataclass(frozen=True)
class GaussianCopulaModel:
    copula_matrix: CopulaCorrelationMatrix
    cholesky_factor: np.ndarray

    @classmethod
    def from_matrix(cls, m: CopulaCorrelationMatrix) -> "GaussianCopulaModel":
        L = cholesky(m)
        L.setflags(write=False)
        return cls(m, L)

    @property
    def n_vars(self) -> int:
        return self.copula_matrix.n_vars


def _clip_p(p):
    return np.clip(p, _P_LO, _P_HI)


def _h(u, v, sigma: float):
    """Conditional CDF of ``u`` given ``v``; unchecked, vectorised."""
    if sigma == 0.0:
        return np.array(u, dtype=float, copy=True)
    s = min(RHO_CLAMP, max(-RHO_CLAMP, sigma))
    zu = ndtri(_clip_p(u))
    zv = ndtri(_clip_p(v))
    return ndtr((zu - s * zv) / math.sqrt(1.0 - s * s))


def _h_inv(p, v, sigma: float):
    """Inverse of :func:`_h` in its first argument; unchecked, vectorised."""
    if sigma == 0.0:
        return np.array(p, dtype=float, copy=True)
    if sigma == 1.0:
        return np.array(v, dtype=float, copy=True)
    if sigma == -1.0:
        return 1.0 - np.asarray(v, dtype=float)
    s = min(RHO_CLAMP, max(-RHO_CLAMP, sigma))
    zp = ndtri(_clip_p(p))
    zv = ndtri(_clip_p(v))
    return ndtr(math.sqrt(1.0 - s * s) * zp + s * zv)


def _check_h_args(u, v, rho):
    for label, a in (("u", u), ("v", v)):
        a = np.asarray(a, dtype=float)
        if np.isnan(a).any() or (a <= 0).any() or (a >= 1).any():
            raise DataError(f"h-function argument {label} must lie in (0, 1)")
    if not -1.0 <= rho <= 1.0:
        raise DataError("copula correlation must lie in [-1, 1]")


def _scalar_or_array(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def h_gauss(u, v, rho: float):
    """``Phi((Phi^-1(u) - rho Phi^-1(v)) / sqrt(1 - rho^2))``: P(U <= u | V = v).

    ``rho`` is the copula-scale correlation of the pair.
    """
    _check_h_args(u, v, rho)
    return _scalar_or_array(_h(u, v, float(rho)))


def h_gauss_inv(p, v, rho: float):
    _check_h_args(p, v, rho)
    return _scalar_or_array(_h_inv(p, v, float(rho)))


def sample_bivariate_copula(rho_r: float, count: int, rng: SeededRng, threads: int = 1) -> np.ndarray:
    """Two uniforms with Spearman correlation ``rho_r`` by conditional inversion.

    Column 0 is the first raw draw; column 1 inverts the conditional copula
    of the second draw given column 0. Mapping to physical values is left to
    the caller (``marginals.quantile``).
    """
    if count < 1:
        raise DataError("count must be a positive integer")
    sigma = rank_to_copula_sigma(rho_r)

    def block(start, n):
        w = rng.uniforms(n, 2, start)
        out = np.empty_like(w)
        out[:, 0] = w[:, 0]
        out[:, 1] = _h_inv(w[:, 1], w[:, 0], sigma)
        return out

    return map_row_blocks(block, count, threads)


def correlate_normals(L: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``z @ L.T`` column by column, in a fixed summation order per row."""
    n = L.shape[0]
    y = np.empty_like(z)
    for i in range(n):
        acc = L[i, 0] * z[:, 0]
        for k in range(1, i + 1):
            acc = acc + L[i, k] * z[:, k]
        y[:, i] = acc
    return y


def joint_normal_transform(
    model: GaussianCopulaModel, count: int, rng: SeededRng, threads: int = 1
) -> np.ndarray:
    """Correlated uniforms from the n-dimensional Gaussian copula."""
    if count < 1:
        raise DataError("count must be a positive integer")
    L = model.cholesky_factor
    n = model.n_vars

    def block(start, rows):
        z = ndtri(rng.uniforms(rows, n, start))
        return ndtr(correlate_normals(L, z))

    return map_row_blocks(block, count, threads)


__all__ = [
    "GaussianCopulaModel",
    "SeededRng",
    "cholesky",
    "correlate_normals",
    "h_gauss",
    "h_gauss_inv",
    "joint_normal_transform",
    "sample_bivariate_copula",
    "std_normal_cdf",
    "std_normal_quantile",
]
