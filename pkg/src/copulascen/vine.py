"""Regular vines, d-vine construction, and d-vine sampling with Gaussian pair copulas.

Variables are referred to by name. In a vine structure, tree ``T_1`` joins
variables; every later tree ``T_{j+1}`` joins edges of ``T_j`` (by index).

For a d-vine with ordering ``x_0, ..., x_{n-1}`` the edge at level ``k``
(1-based) and position ``a`` couples ``x_a`` with ``x_{a+k}`` given the
variables strictly between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dependence import (
    PSD_TOL,
    RankCorrelationMatrix,
    copula_sigma_to_rank,
    min_eigenvalue,
    rank_to_copula_sigma,
)
from .errors import DataError, NotPSDError
from .gaussian_copula import _h, _h_inv
from .rng import SeededRng, map_row_blocks


@dataclass(frozen=True)
class VineEdge:
    conditioned: tuple[str, str]
    conditioning: frozenset[str]
    # the two nodes this edge joins: variable names in T_1, edge indices of T_{j-1} after
    joins: tuple

    def label(self) -> str:
        a, b = self.conditioned
        if not self.conditioning:
            return f"({a},{b})"
        return f"({a},{b}|{','.join(sorted(self.conditioning))})"


@dataclass(frozen=True)
class VineStructure:
    variables: tuple[str, ...]
    trees: tuple[tuple[VineEdge, ...], ...]

    @property
    def n_vars(self) -> int:
        return len(self.variables)


def _constraint(edge: VineEdge) -> frozenset:
    return frozenset(edge.conditioned) | edge.conditioning


def _is_tree(nodes: Sequence, pairs: Sequence[tuple]) -> bool:
    # union-find: a tree on m nodes has m - 1 edges and no cycle
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    if len(pairs) != len(nodes) - 1:
        return False
    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def validate_regular_vine(v: VineStructure) -> str | None:
    """Return ``None`` for a valid regular vine, else a description of the first violation."""
    n = v.n_vars
    if n < 2:
        return "a vine needs at least 2 variables"
    if len(set(v.variables)) != n:
        return "variable names are not unique"
    if len(v.trees) != n - 1:
        return f"expected {n - 1} trees, found {len(v.trees)}"
    prev_nodes: list = list(v.variables)
    prev_edges: tuple[VineEdge, ...] = ()
    for j, tree in enumerate(v.trees, start=1):
        if len(tree) != n - j:
            return f"tree T_{j} has {len(tree)} edges, expected {n - j}"
        node_ids = list(range(len(prev_edges))) if j > 1 else prev_nodes
        for e_idx, edge in enumerate(tree):
            where = f"T_{j} edge {e_idx} {edge.label()}"
            if len(edge.joins) != 2 or edge.joins[0] == edge.joins[1]:
                return f"{where}: must join two distinct nodes"
            if any(node not in node_ids for node in edge.joins):
                return f"{where}: joins a node that is not in T_{j}'s node set (nesting)"
            if j > 1:
                left, right = (prev_edges[k] for k in edge.joins)
                if not set(left.joins) & set(right.joins):
                    return f"{where}: joined edges share no common node (proximity condition)"
            a, b = edge.conditioned
            if a == b or a not in v.variables or b not in v.variables:
                return f"{where}: invalid conditioned pair"
            if set(edge.conditioned) & edge.conditioning:
                return f"{where}: conditioned pair and conditioning set overlap"
            if len(edge.conditioning) != j - 1:
                return f"{where}: conditioning set has size {len(edge.conditioning)}, expected {j - 1}"
            if j == 1:
                if set(edge.joins) != {a, b}:
                    return f"{where}: conditioned pair does not match the joined variables"
                continue
            cl, cr = _constraint(left), _constraint(right)
            if edge.conditioning != cl & cr or frozenset(edge.conditioned) != cl ^ cr:
                return f"{where}: conditioned/conditioning sets inconsistent with the joined edges"
        if not _is_tree(node_ids, [e.joins for e in tree]):
            return f"T_{j} is not a tree (disconnected or cyclic)"
        prev_edges = tree
    return None


def _edge_between(prev_edges, i: int, k: int) -> VineEdge:
    left, right = prev_edges[i], prev_edges[k]
    cl, cr = _constraint(left), _constraint(right)
    a = next(iter(cl - cr))
    b = next(iter(cr - cl))
    return VineEdge((a, b), cl & cr, (i, k))


def dvine_structure(order: Sequence[str]) -> VineStructure:
    """Path-shaped vine on ``order``: T_1 is x_0 - x_1 - ... - x_{n-1}."""
    order = tuple(order)
    n = len(order)
    if n < 2:
        raise DataError("a vine needs at least 2 variables")
    trees = [tuple(VineEdge((order[a], order[a + 1]), frozenset(), (order[a], order[a + 1])) for a in range(n - 1))]
    for level in range(2, n):
        prev = trees[-1]
        trees.append(tuple(_edge_between(prev, a, a + 1) for a in range(n - level)))
    return VineStructure(order, tuple(trees))


def cvine_structure(order: Sequence[str]) -> VineStructure:
    """Star-shaped vine: in every tree the first remaining variable is the hub.

    Structure only; there is no c-vine sampler.
    """
    order = tuple(order)
    n = len(order)
    if n < 2:
        raise DataError("a vine needs at least 2 variables")
    trees = [tuple(VineEdge((order[0], order[b]), frozenset(), (order[0], order[b])) for b in range(1, n))]
    for level in range(2, n):
        prev = trees[-1]
        trees.append(tuple(_edge_between(prev, 0, k) for k in range(1, n - level + 1)))
    return VineStructure(order, tuple(trees))


@dataclass(frozen=True)
class DVineSpec:
    order: tuple[str, ...]
    edge_rank_corrs: tuple[tuple[float, ...], ...]
    edge_sigmas: tuple[tuple[float, ...], ...]

    @property
    def n_vars(self) -> int:
        return len(self.order)

    @property
    def structure(self) -> VineStructure:
        return dvine_structure(self.order)

    def edges(self) -> list[list[str]]:
        """Edge labels per tree level, e.g. ``[["(1,2)", ...], ["(1,3|2)", ...], ...]``."""
        return [[e.label() for e in tree] for tree in self.structure.trees]


def build_dvine(order: Sequence, rank_corrs: Sequence[Sequence[float]]) -> DVineSpec:
    """D-vine on ``order``; ``rank_corrs[k-1][a]`` belongs to the level-k edge starting at ``order[a]``."""
    order = tuple(str(x) for x in order)
    n = len(order)
    if n < 2:
        raise DataError("a d-vine needs at least 2 variables")
    if len(set(order)) != n:
        raise DataError(f"order contains duplicates: {list(order)}")
    if len(rank_corrs) != n - 1:
        raise DataError(f"expected {n - 1} levels of edge correlations, got {len(rank_corrs)}")
    levels = []
    for k, level in enumerate(rank_corrs, start=1):
        level = tuple(float(r) for r in level)
        if len(level) != n - k:
            raise DataError(f"tree level {k} needs {n - k} correlations, got {len(level)}")
        for r in level:
            if not (math.isfinite(r) and -1.0 <= r <= 1.0):
                raise DataError(f"tree level {k}: correlation {r} outside [-1, 1]")
        levels.append(level)
    sigmas = tuple(tuple(float(rank_to_copula_sigma(r)) for r in level) for level in levels)
    spec = DVineSpec(order, tuple(levels), sigmas)
    problem = validate_regular_vine(spec.structure)
    if problem is not None:  # pragma: no cover - dvine_structure is regular by construction
        raise DataError(f"internal error, d-vine is not regular: {problem}")
    return spec


def partial_correlation(c: np.ndarray, i: int, j: int, given: Sequence[int], _memo=None) -> float:
    """Partial correlation of ``i`` and ``j`` given ``given`` by recursive elimination.

    Removes the last conditioning variable ``k`` at each step:
    ``r_ij|Dk = (r_ij|D - r_ik|D r_jk|D) / sqrt((1 - r_ik|D^2)(1 - r_jk|D^2))``.
    """
    memo = {} if _memo is None else _memo
    given = tuple(given)
    key = (min(i, j), max(i, j), frozenset(given))
    if key in memo:
        return memo[key]
    if not given:
        value = float(c[i, j])
    else:
        k, rest = given[-1], given[:-1]
        r_ij = partial_correlation(c, i, j, rest, memo)
        r_ik = partial_correlation(c, i, k, rest, memo)
        r_jk = partial_correlation(c, j, k, rest, memo)
        denom = (1.0 - r_ik * r_ik) * (1.0 - r_jk * r_jk)
        if not denom > 0.0:
            raise DataError(
                f"degenerate conditioning: |partial correlation| reached 1 while conditioning on index {k}"
            )
        value = (r_ij - r_ik * r_jk) / math.sqrt(denom)
        if abs(value) >= 1.0:
            raise DataError("degenerate conditioning: partial correlation reached +/-1")
    memo[key] = value
    return value


def dvine_from_rank_matrix(r: RankCorrelationMatrix, order: Sequence[str]) -> DVineSpec:
    """Edge parameters that make the d-vine's Gaussian copula match ``r``.

    The rank matrix is taken to copula scale, each d-vine edge gets the
    corresponding partial correlation, and that value is reported back on
    rank scale. Matrices needing PSD repair are refused.
    """
    order = tuple(order)
    if sorted(order) != sorted(r.names) or len(set(order)) != len(order):
        raise DataError(f"order {list(order)} must be a permutation of {list(r.names)}")
    idx = [r.names.index(name) for name in order]
    sig = rank_to_copula_sigma(r.entries)
    sig = np.atleast_2d(sig)[np.ix_(idx, idx)]
    np.fill_diagonal(sig, 1.0)
    if min_eigenvalue(sig) < -PSD_TOL:
        raise NotPSDError(
            "copula-scale matrix is not positive semidefinite; repair the rank matrix "
            "(nearest_psd) before building a d-vine"
        )
    n = len(order)
    memo: dict = {}
    levels = []
    for k in range(1, n):
        level = []
        for a in range(n - k):
            s = partial_correlation(sig, a, a + k, range(a + 1, a + k), memo)
            level.append(float(copula_sigma_to_rank(max(-1.0, min(1.0, s)))))
        levels.append(level)
    return build_dvine(order, levels)


def sample_dvine(spec: DVineSpec, count: int, rng: SeededRng, threads: int = 1) -> np.ndarray:
    """Uniform samples from the d-vine, columns in ``spec.order``.

    Row-wise recursion: ``fwd[m]`` is F(x_i | x_{i-1}, ..., x_{i-m}) for the
    variable being drawn, ``bwd[a]`` is F(x_a | x_{a+1}, ..., x_{i-1}). The new
    variable is obtained by peeling the conditioning set one variable at a
    time with inverse h-functions; the backward values are then extended by
    one conditioning variable for the next step.
    """
    if count < 1:
        raise DataError("count must be a positive integer")
    n = spec.n_vars
    sig = spec.edge_sigmas  # sig[k-1][a]: edge (a, a+k | between)

    def block(start, rows):
        w = rng.uniforms(rows, n, start)
        x = np.empty_like(w)
        x[:, 0] = w[:, 0]
        bwd = [x[:, 0]]
        for i in range(1, n):
            fwd = [None] * i
            p = w[:, i]
            for m in range(i, 0, -1):
                p = _h_inv(p, bwd[i - m], sig[m - 1][i - m])
                fwd[m - 1] = p
            x[:, i] = p
            if i == n - 1:
                break
            # bwd[a] <- F(x_a | x_{a+1}..x_i), using F(x_i | x_{i-1}..x_{a+1}) = fwd[i-a-1]
            new_bwd = [None] * (i + 1)
            for a in range(i):
                k = i - a
                new_bwd[a] = _h(bwd[a], fwd[k - 1], sig[k - 1][a])
            new_bwd[i] = x[:, i]
            bwd = new_bwd
        return x

    return map_row_blocks(block, count, threads)


__all__ = [
    "DVineSpec",
    "VineEdge",
    "VineStructure",
    "build_dvine",
    "cvine_structure",
    "dvine_from_rank_matrix",
    "dvine_structure",
    "partial_correlation",
    "sample_dvine",
    "validate_regular_vine",
]
