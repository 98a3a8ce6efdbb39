"""Desk-scale checks on exactly sparse signals.

``equivalence``: how often basis pursuit finds the same support as the
exhaustive l0 search (n=20, m=10, k=3 by default).
``exact``: exact recovery rate (mse <= 1e-10) over a range of m for each
solver (n=256, k=10 by default).

    python scripts/sparse_recovery_rates.py equivalence --instances 100
    python scripts/sparse_recovery_rates.py exact --ms 30 40 50 60
"""

import argparse

import numpy as np
from scipy import fft

from sparserec import (
    ExperimentConfig,
    RecoveryProblem,
    basis_pursuit,
    generate_matrix,
    l0_oracle,
    rng,
    run_recovery,
    synth_sparse,
)


def equivalence(args):
    matches = 0
    for seed in range(args.instances):
        x = synth_sparse(args.n, args.k, rng.derive_seed(seed, 0))
        phi = generate_matrix("gaussian", args.m, args.n, rng.derive_seed(seed, 1))
        A = fft.dct(phi.entries, axis=1, norm="ortho")
        p = RecoveryProblem(A, phi.entries @ x.samples)
        bp = basis_pursuit(p).support(1e-6)
        matches += np.array_equal(bp, l0_oracle(p, args.k).support(1e-6))
    print(f"n={args.n} m={args.m} k={args.k}: BP support == l0 support in {matches}/{args.instances}")


def exact(args):
    print("m,solver,exact_rate")
    for m in args.ms:
        for solver in args.solvers:
            cfg = ExperimentConfig(n=args.n, k=args.k, m_multiples=(1,), solver=solver)
            hits = 0
            for t in range(args.trials):
                x = synth_sparse(args.n, args.k, rng.derive_seed(cfg.seed, 0, t))
                mse, _, _ = run_recovery(x, cfg, m, rng.derive_seed(cfg.seed, m, t))
                hits += mse <= 1e-10
            print(f"{m},{solver},{hits / args.trials:.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True)
    eq = sub.add_parser("equivalence")
    eq.add_argument("--n", type=int, default=20)
    eq.add_argument("--m", type=int, default=10)
    eq.add_argument("--k", type=int, default=3)
    eq.add_argument("--instances", type=int, default=100)
    eq.set_defaults(func=equivalence)
    ex = sub.add_parser("exact")
    ex.add_argument("--n", type=int, default=256)
    ex.add_argument("--k", type=int, default=10)
    ex.add_argument("--ms", type=int, nargs="+", default=[30, 40, 50, 60, 80])
    ex.add_argument("--solvers", nargs="+", default=["bp", "irl1", "omp"])
    ex.add_argument("--trials", type=int, default=50)
    ex.set_defaults(func=exact)
    args = ap.parse_args()
    args.func(args)


if __name__ == "__main__":
    main()
