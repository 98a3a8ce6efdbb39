"""Transform coding against compressed sensing at several compression levels.

For each k, transform coding keeps the k largest DCT coefficients while
compressed sensing recovers from m = ratio * k random measurements. Prints
median MSE over the trials for both.

    python scripts/tc_vs_cs.py --ks 32 64 128 256 --ratio 4
"""

import argparse

from sparserec import ExperimentConfig, make_signal, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--ks", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--ratio", type=int, default=4)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--solver", choices=("bp", "omp", "irl1"), default="bp")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    print("k,m,compression,median_mse_cs,mse_tc,ratio")
    for k in args.ks:
        cfg = ExperimentConfig(k=k, m_multiples=(args.ratio,), trials_per_m=args.trials, solver=args.solver)
        report = sweep(make_signal(cfg), cfg, workers=args.workers)
        (m, (cs, tc)), = report.medians().items()
        print(f"{k},{m},{cfg.n / m:.1f},{cs:.4e},{tc:.4e},{cs / tc:.2f}")


if __name__ == "__main__":
    main()
