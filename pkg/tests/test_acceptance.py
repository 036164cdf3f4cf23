"""Acceptance gate: one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated
in the terminal summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from rgsla import (
    BoundParams,
    TrainConfig,
    blend_adjacency,
    feature_difference_attack,
    homophily_ratios,
    kernel_gradients,
    pairwise_sq_distances,
    prox_l1,
    rademacher_lower_bound,
    run_rgsla,
    similarity_matrix,
    smoothness_loss,
    spectral_norm,
    train_plain_gcn,
    trc_upper_bound,
)
from rgsla.cli import main
from rgsla.gcn import backward, forward, masked_cross_entropy, GcnParams
from rgsla.graph import normalize_adjacency
from rgsla.regularizers import second_singular_value
from rgsla.trainer import objective_terms, structure_gradients

from _oracles import (
    benchmark_sbm,
    central_diff,
    random_gcn,
    random_graph,
    random_structure,
    rel_err,
    smoothness_pairwise,
    sq_dist_loop,
)

SEEDS = range(10)
RATES = (0.0, 0.05, 0.15, 0.25)
PLAIN_LR, PLAIN_EPOCHS, HIDDEN = 0.5, 200, 16


# -- 1 -----------------------------------------------------------------------------

def gradient_errors(seed):
    rng = np.random.default_rng(seed)
    n, d, k, C = int(rng.integers(4, 9)), int(rng.integers(2, 6)), int(rng.integers(2, 5)), int(rng.integers(2, 4))
    g = random_graph(seed, n=n, d=d, C=C)
    gcn = random_gcn(seed, d, k, C)
    A = normalize_adjacency(g.adjacency)
    X, y, mask = g.features, g.labels, g.train_mask

    def loss(p, M):
        return masked_cross_entropy(forward(p, M, X), y, mask)

    grads = backward(gcn, forward(gcn, A, X), y, mask)
    errs = {
        "W1": rel_err(grads.W1, central_diff(lambda W: loss(GcnParams(W, gcn.W2), A), gcn.W1)),
        "W2": rel_err(grads.W2, central_diff(lambda W: loss(GcnParams(gcn.W1, W), A), gcn.W2)),
        "A": rel_err(grads.adjacency, central_diff(lambda M: loss(gcn, M), A)),
    }

    sp = random_structure(seed, d, int(rng.integers(1, d + 1)))
    U = rng.normal(size=(n, n))
    dM, da = kernel_gradients(sp, X, U)

    def weighted(s):
        return float(np.sum(U * similarity_matrix(s, X).similarity))

    errs["M"] = rel_err(dM, central_diff(lambda M: weighted(sp.updated(M=M)), sp.M))
    errs["a"] = rel_err(da, central_diff(lambda a: weighted(sp.updated(a=a)), sp.a))

    cfg = TrainConfig(gamma1=0.3, gamma2=0.5, alpha=sp.alpha, tau=sp.tau, power_tol=1e-14, power_max_iter=20_000)
    dM, da, pair = structure_gradients(g, cfg, gcn, sp)
    Y = X.T @ blend_adjacency(g.adjacency, similarity_matrix(sp, X).similarity, sp.alpha)
    gap = pair.sigma - second_singular_value(Y, pair, tol=1e-14, max_iter=20_000)
    if gap > 1e-3:
        def total(s):
            return objective_terms(g, cfg, gcn, s)["total"]
        errs["step_M"] = rel_err(dM, central_diff(lambda M: total(sp.updated(M=M)), sp.M))
        errs["step_a"] = rel_err(da, central_diff(lambda a: total(sp.updated(a=a)), sp.a))
    return errs


def test_criterion_1_gradient_correctness(report_line):
    start = time.perf_counter()
    worst = {}
    guarded = 0
    for seed in range(20):
        errs = gradient_errors(seed)
        guarded += "step_M" in errs
        for key, value in errs.items():
            worst[key] = max(worst.get(key, 0.0), value)
    elapsed = time.perf_counter() - start
    smooth = max(worst[k] for k in ("W1", "W2", "A", "M", "a"))
    step = max(worst.get("step_M", 0.0), worst.get("step_a", 0.0))
    ok = smooth < 1e-4 and step < 1e-3 and elapsed < 10 and "step_M" in worst
    assert report_line("1 gradient correctness", ok,
                       f"max rel err gcn/kernel {smooth:.2e} (<1e-4), structure step {step:.2e} (<1e-3, "
                       f"{guarded}/20 past the spectral-gap guard), 20 instances in {elapsed:.1f}s")


# -- 2 -----------------------------------------------------------------------------

def test_criterion_2_oracle_equivalences(report_line):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    dist_err = trace_err = 0.0
    for _ in range(10):
        Xt = rng.normal(size=(7, 3))
        dist_err = max(dist_err, float(np.max(np.abs(pairwise_sq_distances(Xt) - sq_dist_loop(Xt)))))
        X = rng.normal(size=(6, 3))
        S = rng.random((6, 6))
        S = S + S.T
        np.fill_diagonal(S, 0.0)
        trace_err = max(trace_err, abs(smoothness_loss(X, S, S.sum(axis=1)) - smoothness_pairwise(X, S)))
    sigma_err = 0.0
    for _ in range(50):
        Y = rng.normal(size=(int(rng.integers(1, 21)), int(rng.integers(1, 16))))
        ref = np.linalg.svd(Y, compute_uv=False)[0]
        sigma_err = max(sigma_err, abs(spectral_norm(Y, tol=1e-12, max_iter=10_000).sigma - ref))
    elapsed = time.perf_counter() - start
    ok = dist_err < 1e-9 and trace_err < 1e-9 and sigma_err < 1e-6 and elapsed < 5
    assert report_line("2 oracle equivalences", ok,
                       f"distances {dist_err:.1e}, trace/pairwise {trace_err:.1e}, "
                       f"sigma_max vs SVD {sigma_err:.1e} over 50 matrices, {elapsed:.2f}s")


# -- 3 -----------------------------------------------------------------------------

def test_criterion_3_exact_reductions(report_line):
    g = benchmark_sbm(0)
    cfg = TrainConfig(gamma1=0.0, gamma2=0.0, alpha=0.0, structure_inner=1, outer_iters=25, gcn_inner=4, seed=7)
    ours, plain = [], []
    run_rgsla(g, cfg, callback=lambda t, p: ours.append(p))
    train_plain_gcn(g, cfg.lr, 100, cfg.hidden, 7, callback=lambda t, p: plain.append(p))
    trajectory = len(ours) == len(plain) == 100 and all(
        np.array_equal(a.W1, b.W1) and np.array_equal(a.W2, b.W2) for a, b in zip(ours, plain))

    rng = np.random.default_rng(3)
    S = rng.random((6, 6))
    A = (rng.random((6, 6)) < 0.4).astype(float)
    a = rng.normal(size=9)
    blend0 = np.array_equal(blend_adjacency(A, S, 0.0), A)
    blend1 = np.array_equal(blend_adjacency(A, S, 1.0), S)
    prox0 = np.array_equal(prox_l1(a, 0.0), a)
    ok = trajectory and blend0 and blend1 and prox0
    assert report_line("3 exact reductions", ok,
                       f"bitwise trajectory {trajectory} (100 steps), alpha=0 {blend0}, alpha=1 {blend1}, "
                       f"prox(0) {prox0}")


# -- 4 and 5 share one sweep -----------------------------------------------------------

@pytest.fixture(scope="module")
def robustness_sweep():
    start = time.perf_counter()
    plain = np.zeros((len(SEEDS), len(RATES)))
    ours = np.zeros_like(plain)
    hom_raw = np.zeros(len(SEEDS))
    hom_learned = np.zeros(len(SEEDS))
    for s in SEEDS:
        g = benchmark_sbm(s)
        for j, rate in enumerate(RATES):
            poisoned = g.with_adjacency(feature_difference_attack(g, rate))
            plain[s, j] = train_plain_gcn(poisoned, PLAIN_LR, PLAIN_EPOCHS, HIDDEN, s).test_accuracy
            report = run_rgsla(poisoned, TrainConfig(seed=s))
            ours[s, j] = report.test_accuracy
            if rate == 0.25:
                hom_raw[s] = homophily_ratios(poisoned).mean()
                hom_learned[s] = homophily_ratios(poisoned, report.adjacency).mean()
    return plain, ours, hom_raw, hom_learned, time.perf_counter() - start


def test_criterion_4_robustness_shape(report_line, robustness_sweep):
    plain, ours, _, _, elapsed = robustness_sweep
    drop = plain[:, 0].mean() - plain[:, -1].mean()
    wins = int(np.sum(ours[:, -1] >= plain[:, -1]))
    curve = " ".join(f"{r:g}:{p:.3f}/{o:.3f}" for r, p, o in zip(RATES, plain.mean(0), ours.mean(0)))
    ok = drop >= 0.05 and wins >= 8 and elapsed < 120
    assert report_line("4 robustness shape", ok,
                       f"plain drop 0->.25 = {drop:.3f} (>=0.05), ours>=plain at .25 in {wins}/10 (>=8), "
                       f"mean acc plain/ours {curve}, {elapsed:.0f}s")


def test_criterion_5_homophily(report_line, robustness_sweep):
    _, _, raw, learned, _ = robustness_sweep
    wins = int(np.sum(learned > raw))
    assert report_line("5 homophily improvement", wins >= 8,
                       f"mean r learned > poisoned in {wins}/10 (>=8); "
                       f"averages {learned.mean():.3f} vs {raw.mean():.3f}")


# -- 6 -----------------------------------------------------------------------------

def test_criterion_6_bound_formulas(report_line):
    A = np.zeros((4, 4))
    for i in range(4):
        A[i, (i + 1) % 4] = A[(i + 1) % 4, i] = 1.0
    B, D, R, l, m = 2.0, 0.7, 1.3, 1.5, 3
    X = np.zeros((4, 3))
    X[:, 0] = B
    A_norm = normalize_adjacency(A)
    # node-wise: ||(B e1)/3 + (B e1)/3|| * (1/3 + 1/3)
    oracle = l**2 * B * D * R / math.sqrt(m) * (2 * B / 3) * (2 / 3)
    value = rademacher_lower_bound(A_norm, X, BoundParams(R=R, D=D, lipschitz=l, m=m, n=4))
    fixture_ok = abs(value - oracle) < 1e-9

    Xr = np.random.default_rng(6).normal(size=(4, 3))
    b1 = rademacher_lower_bound(A_norm, Xr, BoundParams(m=1, n=9))
    b4 = rademacher_lower_bound(A_norm, Xr, BoundParams(m=4, n=9))
    scaling_ok = b4 == b1 / 2

    rng = np.random.default_rng(66)
    monotone_ok = True
    for _ in range(200):
        S = rng.random((7, 7))
        Xs = rng.normal(size=(7, 2))
        p = BoundParams(beta=rng.uniform(0, 2), omega=rng.uniform(0, 2), K=int(rng.integers(1, 4)), m=3, n=7)
        base = trc_upper_bound(S, Xs, p)
        eps = rng.uniform(0, 0.5)
        perturbed = (
            trc_upper_bound((1 + eps) * S, Xs, p),
            trc_upper_bound(S, Xs, BoundParams(**{**p.__dict__, "omega": p.omega + eps})),
            trc_upper_bound(S, Xs, BoundParams(**{**p.__dict__, "beta": p.beta + eps})),
        )
        monotone_ok &= all(v >= base for v in perturbed)
    ok = fixture_ok and scaling_ok and monotone_ok
    assert report_line("6 bound formulas", ok,
                       f"4-cycle |bound - oracle| = {abs(value - oracle):.1e}, 1/sqrt(m) exact {scaling_ok}, "
                       f"TRC monotone in ||S||, omega, beta over 200 perturbations {monotone_ok}")


# -- 7 -----------------------------------------------------------------------------

def test_criterion_7_sparsity(report_line):
    g = benchmark_sbm(0)
    poisoned = g.with_adjacency(feature_difference_attack(g, 0.25))
    counts = [int(np.count_nonzero(run_rgsla(poisoned, TrainConfig(lambda1=lam, seed=0)).structure_params.a))
              for lam in (0.0, 0.01, 0.1, 1.0)]
    ok = all(b <= a for a, b in zip(counts, counts[1:]))
    assert report_line("7 sparsity", ok, f"nonzeros of a for lambda1 0/.01/.1/1: {counts}")


# -- 8 -----------------------------------------------------------------------------

PLAN = """
[data]
source = synthetic
seed = 1

[attack]
kind = feature_difference
rates = 0, 0.25
rate = 0.25
seed = 4

[run]
methods = plain_gcn, rgsla
repeats = 2
seed = 0
jobs = 1

[train]
outer_iters = 10
"""


def run_every_command(root, capsys):
    root.mkdir()
    plan = root / "plan.ini"
    plan.write_text(PLAN, encoding="utf-8")
    codes = [
        main(["gen", "--plan", str(plan), "--out", str(root / "graph")]),
        main(["attack", "--plan", str(plan), "--data", str(root / "graph"), "--out", str(root / "poisoned")]),
        main(["train", "--plan", str(plan), "--data", str(root / "poisoned"), "--out", str(root / "train")]),
        main(["homophily", "--plan", str(plan), "--data", str(root / "poisoned"),
              "--learned", str(root / "train" / "learned" / "feature_difference_rate0.25_seed0.tsv"),
              "--out", str(root / "hom")]),
        main(["bound", "--plan", str(plan), "--data", str(root / "poisoned"), "--modal-degree",
              "--out", str(root / "bound.csv")]),
    ]
    stdout = capsys.readouterr().out.replace(str(root), "<root>")
    files = {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    return codes, stdout, files


def test_criterion_8_determinism(report_line, tmp_path, capsys):
    codes1, out1, files1 = run_every_command(tmp_path / "one", capsys)
    codes2, out2, files2 = run_every_command(tmp_path / "two", capsys)
    differing = sorted(k for k in files1 if files1[k] != files2.get(k))
    ok = codes1 == codes2 == [0] * 5 and out1 == out2 and files1.keys() == files2.keys() and not differing
    assert report_line("8 determinism", ok,
                       f"5 commands, {len(files1)} output files, exit codes {codes1}, "
                       f"differing files {differing or 'none'}, stdout identical {out1 == out2}")
