"""Sorted DCT magnitudes of a 2048-sample segment and their power-law fit.

    python scripts/power_law_decay.py                 # synthetic speech stand-in
    python scripts/power_law_decay.py --wav clip.wav --offset 48000
"""

import argparse
import sys

import numpy as np

from sparserec import dct_forward, fit_power_law, load_wav_segment, sorted_magnitudes, synth_compressible


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--wav")
    ap.add_argument("--offset", type=int, default=0)
    ap.add_argument("--n", type=int, default=2048)
    ap.add_argument("--every", type=int, default=64, help="print every Nth rank")
    args = ap.parse_args()

    if args.wav:
        x = load_wav_segment(args.wav, args.offset, args.n)
    else:
        x = synth_compressible(args.n, 46.97, 1.45, seed=0)
    theta = dct_forward(x)
    mags = sorted_magnitudes(theta)
    fit = fit_power_law(theta)

    print("rank,magnitude,model")
    for rank in np.unique(np.r_[1, np.arange(args.every, args.n + 1, args.every)]):
        print(f"{rank},{mags[rank - 1]:.6g},{fit.predict(rank):.6g}")
    print(f"fit: c={fit.c:.4f} q={fit.q:.4f} residual_rms={fit.residual_rms:.3g}", file=sys.stderr)


if __name__ == "__main__":
    main()
