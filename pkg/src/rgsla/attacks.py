"""Structure-poisoning attacks used in place of a meta-gradient attacker.

The budget for both attacks is ``floor(rate * |E|)`` node pairs, counted
against the edge count of the clean graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Graph, check_symmetric

ATTACK_KINDS = ("random_flip", "feature_difference")


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    rate: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValidationError(f"unknown attack kind {self.kind!r}; expected one of {ATTACK_KINDS}")
        if not 0.0 <= self.rate <= 0.5:
            raise ValidationError("attack rate must lie in [0, 0.5]")

    def apply(self, graph: Graph) -> np.ndarray:
        if self.kind == "random_flip":
            return random_flip_attack(graph.adjacency, self.rate, self.seed)
        return feature_difference_attack(graph, self.rate, self.seed)


def _check_adjacency(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    check_symmetric(A, "adjacency")
    if not np.all((A == 0) | (A == 1)) or np.any(np.diag(A) != 0):
        raise ValidationError("adjacency must be binary with a zero diagonal")
    return A


def attack_budget(A: np.ndarray, rate: float) -> int:
    if rate < 0:
        raise ValidationError("attack rate must be nonnegative")
    # tiny slack so that e.g. 0.15 * 20 is not floored to 2
    return int(math.floor(rate * int(np.triu(A, 1).sum()) + 1e-9))


def random_flip_attack(A: np.ndarray, rate: float, seed: int) -> np.ndarray:
    """Toggle ``budget`` distinct node pairs drawn uniformly at random."""
    A = _check_adjacency(A)
    n = A.shape[0]
    budget = attack_budget(A, rate)
    iu, ju = np.triu_indices(n, 1)
    if budget > iu.size:
        raise ValidationError(f"budget {budget} exceeds the {iu.size} available node pairs")
    out = A.copy()
    if budget == 0:
        return out
    pick = np.random.default_rng(seed).choice(iu.size, size=budget, replace=False)
    i, j = iu[pick], ju[pick]
    out[i, j] = 1.0 - out[i, j]
    out[j, i] = out[i, j]
    return out


def feature_difference_attack(graph: Graph, rate: float, seed: int = 0) -> np.ndarray:
    """Connect the ``budget`` most feature-distant unconnected pairs.

    Pairs are ranked by Euclidean feature distance, ties broken by ``(i, j)``
    in lexicographic order. The ranking is deterministic; ``seed`` is
    accepted for interface symmetry only.
    """
    A = _check_adjacency(graph.adjacency)
    X = graph.features
    budget = attack_budget(A, rate)
    iu, ju = np.triu_indices(graph.n, 1)
    free = A[iu, ju] == 0
    iu, ju = iu[free], ju[free]
    if budget > iu.size:
        raise ValidationError(f"budget {budget} exceeds the {iu.size} unconnected pairs")
    out = A.copy()
    if budget == 0:
        return out
    dist = np.linalg.norm(X[iu] - X[ju], axis=1)
    # lexsort: last key is primary
    order = np.lexsort((ju, iu, -dist))[:budget]
    out[iu[order], ju[order]] = 1.0
    out[ju[order], iu[order]] = 1.0
    return out
