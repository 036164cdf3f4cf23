"""Gaussian-kernel structure model with a sparse feature selector.

Node ``i`` is mapped to ``M (a * x_i)``; the learned similarity is a Gaussian
kernel of squared distances in that space. Only squared distances are ever
formed, so nothing here takes a square root.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class StructureParams:
    M: np.ndarray
    a: np.ndarray
    tau: float
    alpha: float

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if M.ndim != 2 or a.ndim != 1:
            raise ValidationError("M must be a matrix and a a vector")
        p, d = M.shape
        if a.shape[0] != d:
            raise ValidationError(f"a has length {a.shape[0]}, expected {d}")
        if p > d:
            raise ValidationError(f"projection dim p={p} exceeds d={d}")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError("alpha must lie in [0, 1]")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "a", a)

    @classmethod
    def initial(cls, d: int, p: int, tau: float, alpha: float) -> "StructureParams":
        """``M`` = leading identity block padded with zeros, ``a`` = ones."""
        return cls(np.eye(p, d), np.ones(d), tau, alpha)

    def updated(self, M=None, a=None) -> "StructureParams":
        return replace(self, M=self.M if M is None else M, a=self.a if a is None else a)


@dataclass(frozen=True)
class LearnedGraph:
    similarity: np.ndarray
    degree: np.ndarray
    blended: np.ndarray | None = None


def transform_features(params: StructureParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.a.shape[0]:
        raise ValidationError(f"X has shape {X.shape}, expected (n, {params.a.shape[0]})")
    return (X * params.a) @ params.M.T


def pairwise_sq_distances(Xt: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows via ``diag(G) + diag(G)^T - 2G``."""
    Xt = np.asarray(Xt, dtype=float)
    G = Xt @ Xt.T
    g = np.diag(G)
    D = g[:, None] + g[None, :] - 2.0 * G
    D = 0.5 * (D + D.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def similarity_matrix(params: StructureParams, X: np.ndarray) -> LearnedGraph:
    D = pairwise_sq_distances(transform_features(params, X))
    S = np.exp(-D / (2.0 * params.tau**2))
    np.fill_diagonal(S, 0.0)
    return LearnedGraph(similarity=S, degree=S.sum(axis=1))


def blend_adjacency(A: np.ndarray, A_learned: np.ndarray, alpha: float) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError("alpha must lie in [0, 1]")
    A = np.asarray(A, dtype=float)
    A_learned = np.asarray(A_learned, dtype=float)
    if A.shape != A_learned.shape:
        raise ValidationError("adjacency shapes differ")
    return (1.0 - alpha) * A + alpha * A_learned


def prox_l1(a: np.ndarray, threshold: float) -> np.ndarray:
    """Soft-thresholding, the proximal map of ``threshold * ||.||_1``."""
    if threshold < 0:
        raise ValidationError("threshold must be nonnegative")
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.maximum(np.abs(a) - threshold, 0.0)


def kernel_gradients(params: StructureParams, X: np.ndarray, upstream: np.ndarray):
    """Gradients of ``sum_ij upstream_ij * S_ij`` with respect to ``M`` and ``a``.

    ``S`` is the learned similarity (zero diagonal). With per-pair weights
    ``w_ij = -upstream_ij S_ij / (2 tau^2)`` the pair sums collapse onto a
    weighted Laplacian ``L`` of ``w``: ``sum_ij w_ij d_ij d_ij^T = X^T L X``
    for ``d_ij = x_i - x_j``. Then

        dM = 2 M (a a^T * X^T L X)
        da = 2 (M^T M * X^T L X) a

    Returns ``(dM, da)``.
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(upstream, dtype=float)
    S = similarity_matrix(params, X).similarity
    w = -U * S / (2.0 * params.tau**2)
    L = np.diag(w.sum(axis=0) + w.sum(axis=1)) - w - w.T
    C = X.T @ L @ X
    a = params.a
    dM = 2.0 * params.M @ (np.outer(a, a) * C)
    da = 2.0 * ((params.M.T @ params.M) * C) @ a
    return dM, da
