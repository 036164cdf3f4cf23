"""Rademacher-complexity bounds for one-hidden-layer GCNs.

``rademacher_lower_bound`` evaluates the minimax lower bound

    (l^2 B D R / sqrt(m)) * min_k ||Xq_k^T c_k||_2 * sum_t c_k[t]

where, for node ``k`` with its ``q`` neighbours ``N(k)``, ``Xq_k`` stacks
the neighbour features and ``c_k = Abar[N(k), k]``.

``trc_upper_bound`` and ``generalization_gap_bound`` evaluate the
transductive Rademacher bound for K-layer GNNs with filter ``S``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

GAP_C4 = 5.05
GAP_C5 = 0.8


@dataclass(frozen=True)
class BoundParams:
    R: float = 1.0
    D: float = 1.0
    lipschitz: float = 1.0
    m: int = 1
    n: int = 2
    q: int | None = None
    B: float | None = None
    beta: float = 1.0
    omega: float = 1.0
    K: int = 2

    def __post_init__(self):
        for name in ("R", "D", "lipschitz", "beta", "omega"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if self.B is not None and self.B < 0:
            raise ValidationError("B must be nonnegative")
        if self.q is not None and self.q < 1:
            raise ValidationError("q must be at least 1")
        if not 1 <= self.m < self.n:
            raise ValidationError("need 1 <= m < n")
        if self.K < 1:
            raise ValidationError("K must be at least 1")

    @property
    def c1(self) -> float:
        return 2.0 * self.lipschitz * self.beta

    @property
    def c2(self) -> float:
        return 2.0 * self.lipschitz * self.omega

    def c3(self, d: int) -> float:
        return self.lipschitz * self.omega * math.sqrt(2.0 / d)


def neighbour_lists(A_norm: np.ndarray) -> list[np.ndarray]:
    W = np.array(A_norm, dtype=float)
    np.fill_diagonal(W, 0.0)
    return [np.flatnonzero(row) for row in W]


def modal_degree(neighbours) -> int:
    degrees = np.array([len(nb) for nb in neighbours])
    values, counts = np.unique(degrees, return_counts=True)
    # ties: the larger degree
    return int(values[counts == counts.max()].max())


def lower_bound_terms(A_norm: np.ndarray, X: np.ndarray, neighbours, nodes=None) -> np.ndarray:
    """Per-node value ``||Xq_k^T c_k||_2 * sum(c_k)`` for each node in ``nodes``."""
    nodes = range(len(neighbours)) if nodes is None else nodes
    out = np.empty(len(nodes))
    for i, k in enumerate(nodes):
        nb = np.asarray(neighbours[k], dtype=int)
        c = A_norm[nb, k]
        out[i] = np.linalg.norm(X[nb].T @ c) * A_norm[k, nb].sum()
    return out


def rademacher_lower_bound(
    A_norm: np.ndarray,
    X: np.ndarray,
    params: BoundParams,
    neighbour_order=None,
    modal_subgraph: bool = False,
) -> float:
    """Lower bound on the empirical Rademacher complexity.

    Every node must have exactly ``q`` neighbours (``q`` defaults to the
    degree of node 0). With ``modal_subgraph=True`` the minimum runs only over
    nodes of the modal degree instead of raising. ``neighbour_order`` may give
    per-node neighbour index lists; by default they are read off the
    off-diagonal support of ``A_norm`` in ascending order.
    """
    A_norm = np.asarray(A_norm, dtype=float)
    X = np.asarray(X, dtype=float)
    n = A_norm.shape[0]
    if A_norm.shape != (n, n) or X.shape[0] != n:
        raise ValidationError("A_norm must be n x n and X must have n rows")
    neighbours = neighbour_lists(A_norm) if neighbour_order is None else [
        np.asarray(nb, dtype=int) for nb in neighbour_order]
    if len(neighbours) != n:
        raise ValidationError("need one neighbour list per node")

    if modal_subgraph:
        q = modal_degree(neighbours) if params.q is None else params.q
        nodes = [k for k, nb in enumerate(neighbours) if len(nb) == q]
        if not nodes:
            raise ValidationError(f"no node has exactly q={q} neighbours")
    else:
        q = len(neighbours[0]) if params.q is None else params.q
        for k, nb in enumerate(neighbours):
            if len(nb) != q:
                raise ValidationError(
                    f"graph is not {q}-regular: node {k} has {len(nb)} neighbours")
        nodes = list(range(n))
    if q < 1:
        raise ValidationError("the bound needs at least one neighbour per node")

    B = float(np.max(np.linalg.norm(X, axis=1))) if params.B is None else params.B
    terms = lower_bound_terms(A_norm, X, neighbours, nodes)
    scale = params.lipschitz**2 * B * params.D * params.R / math.sqrt(params.m)
    return float(scale * terms.min())


def inf_norm(S: np.ndarray) -> float:
    """Maximum absolute row sum."""
    return float(np.abs(S).sum(axis=1).max())


def two_to_inf_norm(Z: np.ndarray) -> float:
    """Maximum Euclidean row norm."""
    return float(np.linalg.norm(Z, axis=1).max())


def trc_upper_bound(S: np.ndarray, X: np.ndarray, params: BoundParams) -> float:
    S = np.asarray(S, dtype=float)
    X = np.asarray(X, dtype=float)
    n, m, K = params.n, params.m, params.K
    s_inf = inf_norm(S)
    c1, c2, c3 = params.c1, params.c2, params.c3(X.shape[1])
    series = sum((c2 * s_inf) ** k for k in range(K))
    first = c1 * n**2 / (m * (n - m)) * series
    second = c3 * (c2 * s_inf) ** K * two_to_inf_norm(S @ X) * math.sqrt(math.log(n))
    return float(first + second)


def generalization_gap_bound(trc: float, params: BoundParams, delta: float) -> float:
    """High-probability bound on test error minus training error.

    ``delta = 1`` is accepted as the limiting case (confidence term vanishes).
    """
    if not 0.0 < delta <= 1.0:
        raise ValidationError("delta must lie in (0, 1)")
    n, m = params.n, params.m
    middle = GAP_C4 * n * math.sqrt(min(m, n - m)) / (m * (n - m))
    last = GAP_C5 * math.sqrt(n / (m * (n - m)) * math.log(1.0 / delta))
    return float(trc + middle + last)
