"""Smoothness and feature/structure alignment regularizers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .structure import pairwise_sq_distances

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 1000


def _diag_vector(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    return np.diag(D) if D.ndim == 2 else D


def smoothness_loss(X: np.ndarray, S: np.ndarray, D: np.ndarray) -> float:
    """``tr(X^T (D - S) X)``; ``D`` may be the diagonal matrix or its vector."""
    X = np.asarray(X, dtype=float)
    L = np.diag(_diag_vector(D)) - np.asarray(S, dtype=float)
    return float(np.einsum("ij,ij->", X, L @ X))


def smoothness_grad_wrt_similarity(X: np.ndarray) -> np.ndarray:
    """Half the squared row distances of ``X``.

    This is the derivative of ``1/2 sum_ij ||x_i - x_j||^2 S_ij`` in ``S``.
    """
    return 0.5 * pairwise_sq_distances(X)


@dataclass(frozen=True)
class SpectralPair:
    sigma: float
    u: np.ndarray
    v: np.ndarray
    iterations: int
    converged: bool
    history: tuple = ()


def spectral_norm(
    Y: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> SpectralPair:
    """Top singular triple of ``Y`` by power iteration on ``Y^T Y``.

    Stops once successive estimates of sigma differ by less than
    ``tol * max(1, sigma)``. If ``max_iter`` is hit the best estimate is
    returned with ``converged=False``.
    """
    Y = np.asarray(Y, dtype=float)
    rows, cols = Y.shape
    if not np.any(Y):
        u = np.zeros(rows)
        v = np.zeros(cols)
        u[0] = v[0] = 1.0
        return SpectralPair(0.0, u, v, 0, True, (0.0,))

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(cols)
    v /= np.linalg.norm(v)
    w = Y @ v
    sigma = np.linalg.norm(w)
    history = [sigma]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = Y.T @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            # start vector was in the null space
            v = rng.standard_normal(cols)
            v /= np.linalg.norm(v)
        else:
            v = z / nz
        w = Y @ v
        new_sigma = np.linalg.norm(w)
        history.append(new_sigma)
        done = abs(new_sigma - sigma) < tol * max(1.0, new_sigma)
        sigma = new_sigma
        if done:
            converged = True
            break
    u = w / sigma if sigma > 0 else np.eye(rows)[0]
    return SpectralPair(float(sigma), u, v, it, converged, tuple(history))


def second_singular_value(Y: np.ndarray, top: SpectralPair, seed: int = 1, **kw) -> float:
    """Estimate sigma_2 by power iteration on the rank-one deflation of ``Y``."""
    Y = np.asarray(Y, dtype=float)
    return spectral_norm(Y - top.sigma * np.outer(top.u, top.v), seed=seed, **kw).sigma


class AlignmentResult(NamedTuple):
    loss: float
    grad: np.ndarray
    pair: SpectralPair


def alignment_loss_and_grad(
    X: np.ndarray,
    A: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> AlignmentResult:
    """Spectral norm of ``X^T A`` and its (sub)gradient in ``A``.

    With top pair ``(u, v)`` of ``Y = X^T A`` the gradient is ``X u v^T``,
    symmetrized because ``A`` is constrained symmetric. At a repeated top
    singular value this is one valid subgradient among many.
    """
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    pair = spectral_norm(X.T @ A, tol=tol, max_iter=max_iter, seed=seed)
    if pair.sigma == 0.0:
        return AlignmentResult(0.0, np.zeros_like(A), pair)
    G = np.outer(X @ pair.u, pair.v)
    return AlignmentResult(pair.sigma, 0.5 * (G + G.T), pair)
