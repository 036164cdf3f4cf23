import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rgsla import alignment_loss_and_grad, smoothness_grad_wrt_similarity, smoothness_loss, spectral_norm
from rgsla.regularizers import second_singular_value

from _oracles import central_diff, rel_err, smoothness_pairwise

finite = st.floats(-5, 5, allow_nan=False)


def random_similarity(rng, n):
    S = rng.random((n, n))
    S = S + S.T
    np.fill_diagonal(S, 0.0)
    return S


# -- smoothness -------------------------------------------------------------------

def test_smoothness_zero_similarity():
    X = np.random.default_rng(0).normal(size=(5, 3))
    assert smoothness_loss(X, np.zeros((5, 5)), np.zeros(5)) == 0.0


def test_smoothness_constant_rows():
    rng = np.random.default_rng(1)
    X = np.tile(rng.normal(size=3), (6, 1))
    S = random_similarity(rng, 6)
    assert abs(smoothness_loss(X, S, S.sum(axis=1))) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_smoothness_trace_equals_pairwise(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(6, 3))
    S = random_similarity(rng, 6)
    trace = smoothness_loss(X, S, np.diag(S.sum(axis=1)))
    assert abs(trace - smoothness_pairwise(X, S)) < 1e-9
    assert smoothness_loss(X, S, S.sum(axis=1)) == trace


def test_smoothness_grad_cases():
    assert not smoothness_grad_wrt_similarity(np.ones((3, 2))).any()
    G = smoothness_grad_wrt_similarity(np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert G[0, 1] == 12.5


def test_smoothness_grad_matches_finite_differences():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 3))
    S = random_similarity(rng, 5)
    # degrees follow the similarity; S is symmetric, so compare on the
    # symmetric part of the free-entry derivative
    fd = central_diff(lambda T: smoothness_loss(X, T, T.sum(axis=1)), S)
    assert rel_err(smoothness_grad_wrt_similarity(X), 0.5 * (fd + fd.T)) < 1e-4


# -- spectral norm ------------------------------------------------------------------

def test_spectral_norm_diagonal():
    pair = spectral_norm(np.diag([3.0, 2.0]), tol=1e-14)
    assert pair.sigma == pytest.approx(3.0, abs=1e-10)
    assert abs(abs(pair.v[0]) - 1.0) < 1e-6 and abs(pair.v[1]) < 1e-3
    assert pair.converged


def test_spectral_norm_zero_matrix():
    pair = spectral_norm(np.zeros((3, 4)))
    assert pair.sigma == 0.0 and pair.converged and pair.iterations == 0


def test_spectral_norm_random_10x7():
    Y = np.random.default_rng(10).normal(size=(10, 7))
    ref = np.linalg.svd(Y, compute_uv=False)[0]
    assert abs(spectral_norm(Y, tol=1e-12, max_iter=10_000).sigma - ref) < 1e-6


def test_spectral_norm_fifty_random_matrices():
    rng = np.random.default_rng(50)
    worst = 0.0
    for _ in range(50):
        r, c = rng.integers(1, 21), rng.integers(1, 16)
        Y = rng.normal(size=(r, c))
        ref = np.linalg.svd(Y, compute_uv=False)[0]
        worst = max(worst, abs(spectral_norm(Y, tol=1e-12, max_iter=10_000).sigma - ref))
    assert worst < 1e-6


def test_spectral_norm_flags_non_convergence():
    Y = np.random.default_rng(0).normal(size=(6, 6))
    pair = spectral_norm(Y, tol=0.0, max_iter=3)
    assert not pair.converged and pair.iterations == 3


@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite))
def test_spectral_norm_transpose_invariant(Y):
    a = spectral_norm(Y, tol=1e-12, max_iter=20_000).sigma
    b = spectral_norm(Y.T, tol=1e-12, max_iter=20_000).sigma
    ref = np.linalg.svd(Y, compute_uv=False)[0] if Y.any() else 0.0
    assert abs(a - b) <= 1e-5 * max(1.0, ref)


@given(arrays(np.float64, (5, 4), elements=finite), st.integers(0, 100))
def test_power_iteration_history_non_decreasing(Y, seed):
    h = np.array(spectral_norm(Y, seed=seed).history)
    assert np.all(np.diff(h) >= -1e-9 * max(1.0, h.max()))


def test_second_singular_value_by_deflation():
    Y = np.random.default_rng(4).normal(size=(8, 5))
    ref = np.linalg.svd(Y, compute_uv=False)
    top = spectral_norm(Y, tol=1e-14, max_iter=10_000)
    assert second_singular_value(Y, top, tol=1e-14, max_iter=10_000) == pytest.approx(ref[1], abs=1e-6)


# -- alignment -------------------------------------------------------------------

def test_alignment_zero_adjacency():
    res = alignment_loss_and_grad(np.ones((4, 2)), np.zeros((4, 4)))
    assert res.loss == 0.0 and not res.grad.any()


def test_alignment_identity_features():
    rng = np.random.default_rng(3)
    A = random_similarity(rng, 5)
    res = alignment_loss_and_grad(np.eye(5), A, tol=1e-14, max_iter=10_000)
    assert res.loss == pytest.approx(np.linalg.norm(A, 2), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_alignment_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(6, 4))
    A = random_similarity(rng, 6)
    res = alignment_loss_and_grad(X, A, tol=1e-14, max_iter=10_000)
    gap = res.loss - second_singular_value(X.T @ A, res.pair, tol=1e-14, max_iter=10_000)
    if gap <= 1e-3:
        pytest.skip("top singular value not separated")
    fd = central_diff(lambda B: np.linalg.svd(X.T @ B, compute_uv=False)[0], A)
    assert rel_err(res.grad, 0.5 * (fd + fd.T)) < 1e-3
