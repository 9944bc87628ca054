"""Rank correlation estimation and the Gaussian-copula correlation scale.

A Spearman coefficient ``rho_r`` of two variables joined by a Gaussian copula
corresponds to the copula parameter ``sigma = 2 sin(pi rho_r / 6)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, NotPSDError

PSD_TOL = 1e-8
EIG_FLOOR = 1e-10


def _freeze(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_corr_matrix(names, entries, what: str) -> None:
    n = len(names)
    if entries.shape != (n, n):
        raise DataError(f"{what}: expected a {n}x{n} matrix, got {entries.shape}")
    if not np.isfinite(entries).all():
        raise DataError(f"{what}: entries must be finite")
    if not np.array_equal(entries, entries.T):
        raise DataError(f"{what}: matrix must be symmetric")
    if not np.all(np.diag(entries) == 1.0):
        raise DataError(f"{what}: diagonal must be exactly 1")
    if np.abs(entries).max() > 1.0:
        raise DataError(f"{what}: entries must lie in [-1, 1]")


@dataclass(frozen=True)
class RankCorrelationMatrix:
    names: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "entries", _freeze(self.entries))
        _check_corr_matrix(self.names, self.entries, "rank correlation matrix")

    @property
    def n_vars(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class CopulaCorrelationMatrix:
    names: tuple[str, ...]
    entries: np.ndarray
    psd_repaired: bool = False

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "entries", _freeze(self.entries))
        _check_corr_matrix(self.names, self.entries, "copula correlation matrix")
        if min_eigenvalue(self.entries) < -PSD_TOL:
            raise NotPSDError("copula correlation matrix is not positive semidefinite")

    @property
    def n_vars(self) -> int:
        return len(self.names)


def min_eigenvalue(m) -> float:
    return float(np.linalg.eigvalsh(np.asarray(m, dtype=float))[0])


def _pearson_of_ranks(rx: np.ndarray, ry: np.ndarray) -> float:
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    r = float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return min(1.0, max(-1.0, r))


def spearman(x, y) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise DataError("spearman needs at least 3 paired observations")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError("spearman inputs must be finite")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DataError("spearman undefined for a constant input")
    return _pearson_of_ranks(rankdata(x), rankdata(y))


def spearman_matrix_from_array(values, names: Sequence[str] | None = None) -> RankCorrelationMatrix:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise DataError("expected an n_obs x n_vars array")
    n_obs, n_vars = values.shape
    if names is None:
        names = [f"x{i + 1}" for i in range(n_vars)]
    names = tuple(names)
    if n_obs < 3:
        raise DataError("spearman matrix needs at least 3 observations")
    if not np.isfinite(values).all():
        raise DataError("spearman matrix inputs must be finite")
    for j, name in enumerate(names):
        col = values[:, j]
        if np.all(col == col[0]):
            raise DataError(f"column {name!r} is constant; rank correlation undefined")
    ranks = rankdata(values, axis=0)
    centred = ranks - ranks.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centred, centred))
    entries = (centred.T @ centred) / np.outer(norms, norms)
    entries = np.clip(entries, -1.0, 1.0)
    entries = 0.5 * (entries + entries.T)
    np.fill_diagonal(entries, 1.0)
    return RankCorrelationMatrix(names, entries)


def spearman_matrix(d) -> RankCorrelationMatrix:
    """Pairwise Spearman matrix of a :class:`~copulascen.ingest.Dataset`."""
    if d.has_missing():
        raise DataError("dataset contains missing values; clean it first")
    return spearman_matrix_from_array(d.rows, d.variable_names)


def rank_to_copula_sigma(rho_r):
    """``2 sin(pi rho_r / 6)``; the endpoints -1, 0, 1 map to themselves exactly."""
    r = np.asarray(rho_r, dtype=float)
    if np.isnan(r).any() or (np.abs(r) > 1.0).any():
        raise DataError("rank correlation must lie in [-1, 1]")
    s = 2.0 * np.sin(np.pi * r / 6.0)
    # 2 sin(pi/6) evaluates to 0.9999999999999999 in binary64
    s = np.where(np.abs(r) == 1.0, r, s)
    s = np.clip(s, -1.0, 1.0)
    return float(s) if s.ndim == 0 else s


def copula_sigma_to_rank(sigma):
    s = np.asarray(sigma, dtype=float)
    if np.isnan(s).any() or (np.abs(s) > 1.0).any():
        raise DataError("copula correlation must lie in [-1, 1]")
    r = (6.0 / np.pi) * np.arcsin(s / 2.0)
    r = np.where(np.abs(s) == 1.0, s, r)
    r = np.clip(r, -1.0, 1.0)
    return float(r) if r.ndim == 0 else r


def nearest_psd(m) -> np.ndarray:
    """Clip negative eigenvalues and rescale back to a unit diagonal.

    Matrices already PSD (min eigenvalue >= -1e-8) are returned unchanged.
    """
    m = np.array(m, dtype=float, copy=True)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError("nearest_psd needs a square matrix")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12):
        raise DataError("nearest_psd needs a symmetric matrix")
    if not np.allclose(np.diag(m), 1.0, rtol=0, atol=1e-12):
        raise DataError("nearest_psd needs a unit diagonal")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NotPSDError(f"eigen-decomposition failed: {exc}") from exc
    if w[0] >= -PSD_TOL:
        return m
    w = np.maximum(w, EIG_FLOOR)
    out = (v * w) @ v.T
    d = np.sqrt(np.diag(out))
    out = out / np.outer(d, d)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    out = np.clip(out, -1.0, 1.0)
    if min_eigenvalue(out) < -PSD_TOL:
        raise NotPSDError("PSD repair did not converge")
    return out


def to_copula_matrix(r: RankCorrelationMatrix) -> CopulaCorrelationMatrix:
    entries = rank_to_copula_sigma(r.entries)
    entries = np.atleast_2d(entries)
    np.fill_diagonal(entries, 1.0)
    repaired = False
    if min_eigenvalue(entries) < -PSD_TOL:
        entries = nearest_psd(entries)
        repaired = True
    return CopulaCorrelationMatrix(r.names, entries, repaired)


__all__ = [
    "CopulaCorrelationMatrix",
    "PSD_TOL",
    "RankCorrelationMatrix",
    "copula_sigma_to_rank",
    "min_eigenvalue",
    "nearest_psd",
    "rank_to_copula_sigma",
    "spearman",
    "spearman_matrix",
    "spearman_matrix_from_array",
    "to_copula_matrix",
]
