"""Robust graph structure learning with feature/structure alignment.

Dense-numpy implementation of a jointly trained Gaussian-kernel structure
learner and two-layer GCN, with proxy structure attacks, Rademacher-type
bound calculators and a small experiment CLI.
"""

from .errors import DivergenceError, ValidationError
from .graph import (
    Graph,
    homophily_ratios,
    normalize_adjacency,
    prune_epsilon,
    prune_knn,
    sbm_generate,
)
from .structure import (
    LearnedGraph,
    StructureParams,
    blend_adjacency,
    kernel_gradients,
    pairwise_sq_distances,
    prox_l1,
    similarity_matrix,
    transform_features,
)
from .gcn import ForwardCache, GcnParams, backward, forward, masked_cross_entropy, sgd_step
from .regularizers import (
    SpectralPair,
    alignment_loss_and_grad,
    smoothness_grad_wrt_similarity,
    smoothness_loss,
    spectral_norm,
)
from .trainer import TrainConfig, TrainReport, evaluate_accuracy, run_rgsla, train_plain_gcn
from .attacks import AttackSpec, feature_difference_attack, random_flip_attack
from .bounds import (
    BoundParams,
    generalization_gap_bound,
    rademacher_lower_bound,
    trc_upper_bound,
)

__version__ = "0.1.0"
