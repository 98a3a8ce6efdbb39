"""MSE of l1 recovery as the number of measurements grows from k to 6k.

Writes the per-trial CSV (plus ``.meta`` sidecar) and prints per-m medians.
The default configuration takes a few minutes.

    python scripts/convergence_sweep.py --out sweep.csv --workers 4
"""

import argparse
import dataclasses

from sparserec import ExperimentConfig, make_signal, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="sweep.csv")
    ap.add_argument("--solver", choices=("bp", "omp", "irl1"), default="bp")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--wav")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig(solver=args.solver, trials_per_m=args.trials, seed=args.seed)
    if args.wav:
        cfg = dataclasses.replace(cfg, source="wav", wav_path=args.wav)
    report = sweep(make_signal(cfg), cfg, workers=args.workers)
    report.write(args.out)

    print("m,m_over_k,median_mse_cs,mse_tc")
    for m, (cs, tc) in report.medians().items():
        print(f"{m},{m // cfg.k},{cs:.4e},{tc:.4e}")


if __name__ == "__main__":
    main()
