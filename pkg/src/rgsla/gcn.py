"""Two-layer GCN ``softmax(A relu(A X W1) W2)`` with hand-written backprop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError


@dataclass(frozen=True)
class GcnParams:
    W1: np.ndarray
    W2: np.ndarray

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @classmethod
    def glorot(cls, d: int, hidden: int, num_classes: int, rng: np.random.Generator) -> "GcnParams":
        def uniform(fan_in, fan_out):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-bound, bound, size=(fan_in, fan_out))

        W1 = uniform(d, hidden)
        W2 = uniform(hidden, num_classes)
        return cls(W1, W2)


@dataclass(frozen=True)
class GcnGrads:
    W1: np.ndarray
    W2: np.ndarray
    adjacency: np.ndarray


@dataclass(frozen=True)
class ForwardCache:
    adjacency: np.ndarray
    X: np.ndarray
    AX: np.ndarray
    Z1: np.ndarray
    H1: np.ndarray
    AH: np.ndarray
    Z2: np.ndarray
    P: np.ndarray


def softmax_rows(Z: np.ndarray) -> np.ndarray:
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def _finite(arr: np.ndarray, layer: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(layer)
    return arr


def forward(params: GcnParams, A_norm: np.ndarray, X: np.ndarray) -> ForwardCache:
    A_norm = np.asarray(A_norm, dtype=float)
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if A_norm.shape != (n, n) or params.W1.shape[0] != X.shape[1]:
        raise ValidationError("shapes of adjacency, features and W1 are inconsistent")
    if params.W2.shape[0] != params.W1.shape[1]:
        raise ValidationError("W1 and W2 hidden widths differ")

    # overflow is reported as DivergenceError below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        AX = A_norm @ X
        Z1 = _finite(AX @ params.W1, "layer1")
        H1 = np.maximum(Z1, 0.0)
        AH = A_norm @ H1
        Z2 = _finite(AH @ params.W2, "layer2")
    P = softmax_rows(Z2)
    return ForwardCache(A_norm, X, AX, Z1, H1, AH, Z2, P)


def _check_mask(mask: np.ndarray, n: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n,):
        raise ValidationError("mask must have length n")
    if not mask.any():
        raise ValidationError("mask selects no nodes")
    return mask


def masked_cross_entropy(cache: ForwardCache, y: np.ndarray, mask: np.ndarray) -> float:
    """Mean of ``-log P[i, y_i]`` over the masked nodes."""
    mask = _check_mask(mask, cache.P.shape[0])
    idx = np.flatnonzero(mask)
    y = np.asarray(y)
    # log-softmax straight from logits avoids log(0) for saturated rows
    Z = cache.Z2[idx]
    zmax = Z.max(axis=1, keepdims=True)
    logp = Z - zmax - np.log(np.exp(Z - zmax).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(idx.size), y[idx]].mean())


def backward(params: GcnParams, cache: ForwardCache, y: np.ndarray, mask: np.ndarray) -> GcnGrads:
    """Gradients of the masked mean cross-entropy.

    The adjacency gradient is taken with respect to the normalized matrix
    actually fed to :func:`forward`, summing over both propagation steps.
    ReLU has derivative 0 at 0.
    """
    mask = _check_mask(mask, cache.P.shape[0])
    y = np.asarray(y)
    A = cache.adjacency
    m = mask.sum()

    dZ2 = np.zeros_like(cache.P)
    idx = np.flatnonzero(mask)
    dZ2[idx] = cache.P[idx]
    dZ2[idx, y[idx]] -= 1.0
    dZ2 /= m

    dW2 = cache.AH.T @ dZ2
    dAH = dZ2 @ params.W2.T
    dA = dAH @ cache.H1.T
    dH1 = A.T @ dAH
    dZ1 = dH1 * (cache.Z1 > 0)
    dW1 = cache.AX.T @ dZ1
    dA += dZ1 @ (cache.X @ params.W1).T
    return GcnGrads(dW1, dW2, dA)


def sgd_step(params: GcnParams, grads: GcnGrads, lr: float) -> GcnParams:
    if not lr > 0:
        raise ValidationError("step size must be positive")
    return GcnParams(params.W1 - lr * grads.W1, params.W2 - lr * grads.W2)
