"""Graph container, adjacency normalization, pruning and synthetic graphs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

SYMMETRY_ATOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def check_symmetric(A: np.ndarray, name: str = "matrix") -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=SYMMETRY_ATOL):
        raise ValidationError(f"{name} is not symmetric")


@dataclass(frozen=True, eq=False)
class Graph:
    """Node-classification instance with a binary undirected adjacency.

    Arrays are copied on construction and frozen, so a ``Graph`` can be
    shared freely. Use :meth:`with_adjacency` to derive a poisoned copy.
    """

    features: np.ndarray
    adjacency: np.ndarray
    labels: np.ndarray
    num_classes: int
    train_mask: np.ndarray
    test_mask: np.ndarray
    name: str = field(default="graph", compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        A = np.asarray(self.adjacency, dtype=float)
        y = np.asarray(self.labels)
        train = np.asarray(self.train_mask, dtype=bool)
        test = np.asarray(self.test_mask, dtype=bool)

        if X.ndim != 2:
            raise ValidationError("features must be a 2-d matrix")
        n = X.shape[0]
        if A.shape != (n, n):
            raise ValidationError(f"adjacency shape {A.shape} does not match n={n}")
        check_symmetric(A, "adjacency")
        if not np.all((A == 0) | (A == 1)):
            raise ValidationError("adjacency must be binary")
        if np.any(np.diag(A) != 0):
            raise ValidationError("adjacency must have a zero diagonal")
        if y.shape != (n,) or not np.issubdtype(y.dtype, np.integer):
            raise ValidationError("labels must be an integer vector of length n")
        if self.num_classes < 1:
            raise ValidationError("num_classes must be positive")
        if n and (y.min() < 0 or y.max() >= self.num_classes):
            raise ValidationError("labels must lie in [0, num_classes)")
        if train.shape != (n,) or test.shape != (n,):
            raise ValidationError("masks must be boolean vectors of length n")
        if np.any(train & test):
            raise ValidationError("train and test masks overlap")
        if not train.any():
            raise ValidationError("train mask is empty")

        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "adjacency", _readonly(A))
        object.__setattr__(self, "labels", _readonly(y.astype(np.int64)))
        object.__setattr__(self, "train_mask", _readonly(train))
        object.__setattr__(self, "test_mask", _readonly(test))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    @property
    def num_labeled(self) -> int:
        return int(self.train_mask.sum())

    def with_adjacency(self, A: np.ndarray) -> "Graph":
        return Graph(self.features, A, self.labels, self.num_classes,
                     self.train_mask, self.test_mask, name=self.name)


def normalize_adjacency(A: np.ndarray) -> np.ndarray:
    """Symmetric GCN normalization ``D^-1/2 (A + I) D^-1/2``.

    Accepts weighted input (the blended adjacency is real valued). ``D`` is
    the diagonal of row sums of ``A + I``.
    """
    A = np.asarray(A, dtype=float)
    check_symmetric(A, "adjacency")
    if np.any(A < 0):
        raise ValidationError("adjacency entries must be nonnegative")
    A_tilde = A + np.eye(A.shape[0])
    s = 1.0 / np.sqrt(A_tilde.sum(axis=1))
    return s[:, None] * A_tilde * s[None, :]


def normalize_adjacency_vjp(A: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Pull a gradient on ``normalize_adjacency(A)`` back onto ``A``.

    Entries of ``A`` are treated as independent, so the result is generally
    not symmetric; symmetrize it when ``A`` is constrained symmetric.
    """
    A = np.asarray(A, dtype=float)
    G = np.asarray(grad, dtype=float)
    B = A + np.eye(A.shape[0])
    deg = B.sum(axis=1)
    s = 1.0 / np.sqrt(deg)
    # d(loss)/d(s_k): k appears both as the row and the column index
    ds = ((G + G.T) * B) @ s
    ddeg = -0.5 * ds * deg ** -1.5
    return G * np.outer(s, s) + ddeg[:, None]


def prune_knn(W: np.ndarray, k: int) -> np.ndarray:
    """Keep the ``k`` largest off-diagonal weights per row.

    Ties go to the lower column index. The result is symmetrized with an
    element-wise maximum, i.e. the union of the directed kNN edges.
    """
    W = np.array(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError("W must be square")
    if k < 1:
        raise ValidationError("k must be a positive integer")
    n = W.shape[0]
    np.fill_diagonal(W, 0.0)
    if k >= n:
        return W

    scores = -W
    # Diagonal must never be selected.
    np.fill_diagonal(scores, np.inf)
    order = np.argsort(scores, axis=1, kind="stable")[:, :k]
    keep = np.zeros_like(W, dtype=bool)
    np.put_along_axis(keep, order, True, axis=1)
    pruned = np.where(keep, W, 0.0)
    return np.maximum(pruned, pruned.T)


def prune_epsilon(W: np.ndarray, eps: float) -> np.ndarray:
    """Zero every entry strictly below ``eps``; entries equal to it survive."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError("W must be square")
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    return np.where(W < eps, 0.0, W)


def homophily_ratios(graph: Graph, W: np.ndarray | None = None) -> np.ndarray:
    """Per-node fraction of neighbours that share the node's label.

    Neighbours of ``j`` are the ``i != j`` with ``W[i, j] > 0``. Isolated
    nodes get 0.
    """
    W = graph.adjacency if W is None else np.asarray(W, dtype=float)
    if W.shape != (graph.n, graph.n):
        raise ValidationError("W must be n x n")
    nbr = W > 0
    np.fill_diagonal(nbr, False)
    same = graph.labels[:, None] == graph.labels[None, :]
    deg = nbr.sum(axis=0)
    hits = (nbr & same).sum(axis=0)
    out = np.zeros(graph.n)
    has = deg > 0
    out[has] = hits[has] / deg[has]
    return out


def split_masks(labels: np.ndarray, train_frac: float, rng: np.random.Generator):
    """Stratified train/test split; at least one training node per class."""
    if not 0 < train_frac < 1:
        raise ValidationError("train_frac must lie in (0, 1)")
    n = len(labels)
    train = np.zeros(n, dtype=bool)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        take = max(1, int(round(train_frac * len(idx))))
        train[rng.permutation(idx)[:take]] = True
    return train, ~train


def sbm_generate(
    sizes,
    p_in: float,
    p_out: float,
    feature_means,
    noise_sd: float,
    seed: int,
    train_frac: float = 0.1,
) -> Graph:
    """Stochastic block model with Gaussian features around per-block means.

    Labels are block indices. The split is stratified with ``train_frac`` of
    each block marked for training and the rest for testing.
    """
    sizes = [int(s) for s in sizes]
    means = np.atleast_2d(np.asarray(feature_means, dtype=float))
    if not sizes or any(s <= 0 for s in sizes):
        raise ValidationError("every block must contain at least one node")
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValidationError("need 0 <= p_out <= p_in <= 1")
    if means.shape[0] != len(sizes):
        raise ValidationError("need one feature-mean row per block")
    if noise_sd < 0:
        raise ValidationError("noise_sd must be nonnegative")

    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size

    probs = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    draws = rng.random((n, n))
    upper = np.triu(draws < probs, 1)
    A = (upper | upper.T).astype(float)

    X = means[labels] + noise_sd * rng.standard_normal((n, means.shape[1]))
    train, test = split_masks(labels, train_frac, rng)
    return Graph(X, A, labels, len(sizes), train, test, name="sbm")
