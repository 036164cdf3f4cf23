"""Wall-clock scaling of one training run against graph size.

    python3 benchmarks/bench_train.py --sizes 100 200 400 --outer 10
"""

import argparse
import time

import numpy as np

from rgsla import TrainConfig, feature_difference_attack, run_rgsla, sbm_generate, train_plain_gcn


def make_graph(n, dim, seed):
    means = np.zeros((2, dim))
    means[0, 0], means[1, 0] = 0.25, -0.25
    half = n // 2
    # expected degree stays roughly constant as n grows
    p_in = min(1.0, 12.0 / half)
    g = sbm_generate((half, n - half), p_in, p_in / 4, means, 0.1, seed)
    return g.with_adjacency(feature_difference_attack(g, 0.25))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--outer", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = TrainConfig(outer_iters=args.outer, seed=args.seed)
    epochs = cfg.outer_iters * cfg.structure_inner * cfg.gcn_inner
    print(f"{'n':>6} {'edges':>7} {'plain_ms':>10} {'rgsla_ms':>10} {'ms/outer':>9}")
    for n in args.sizes:
        g = make_graph(n, args.dim, args.seed)
        t0 = time.perf_counter()
        train_plain_gcn(g, cfg.lr, epochs, cfg.hidden, args.seed)
        t1 = time.perf_counter()
        run_rgsla(g, cfg)
        t2 = time.perf_counter()
        rgsla_ms = 1e3 * (t2 - t1)
        print(f"{n:>6} {g.num_edges:>7} {1e3 * (t1 - t0):>10.1f} {rgsla_ms:>10.1f} {rgsla_ms / max(1, args.outer):>9.1f}")


if __name__ == "__main__":
    main()
