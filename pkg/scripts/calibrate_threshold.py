#!/usr/bin/env python3
"""Success rate of warm-started Newton-Schulz inversion vs move size.

Replicates the threshold-calibration experiment at a configurable scale:
pixels drawn U[0.001, 1], sign-flip moves of magnitude delta, warm start at
the pre-move inverse.  The printed table shows where the warm start stops
converging, which motivates the refresh threshold used by the
reconstruction loop (default 0.12).
"""

import argparse

import numpy as np

from multilook.likelihood import covariance_complex
from multilook.linalg import BlockHermitian, exact_inverse_block, newton_schulz_converge
from multilook.measurement import make_sensing
from multilook.rng import RngSpec


def success_rate(n, m, delta, trials, seed):
    hits = 0
    for trial in range(trials):
        rng = RngSpec(seed + trial, (int(round(delta * 1000)),))
        A = make_sensing(m, n, "haar-rows", rng.child(1))
        gen = rng.child(2).generator()
        x = gen.uniform(0.001, 1.0, n)
        dx = delta * gen.choice([-1.0, 1.0], n)
        M0 = exact_inverse_block(BlockHermitian.from_complex(covariance_complex(x, A, 1.0, 0.0)))
        B = BlockHermitian.from_complex(covariance_complex(x + dx, A, 1.0, 0.0))
        _, _, converged = newton_schulz_converge(B, M0, tol=1e-10, max_steps=60)
        hits += converged
    return hits / trials


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--side", type=int, default=32, help="image side length (n = side^2)")
    ap.add_argument("--mn-ratio", type=float, default=0.5)
    ap.add_argument("--deltas", type=float, nargs="+",
                    default=[0.10, 0.11, 0.12, 0.13, 0.14, 0.15])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    n = args.side**2
    m = int(round(args.mn_ratio * n))
    print(f"n = {args.side}x{args.side}, m/n = {args.mn_ratio}, {args.trials} trials per delta")
    print(f"{'delta':>8} {'success rate':>14}")
    for delta in args.deltas:
        rate = success_rate(n, m, delta, args.trials, args.seed)
        print(f"{delta:>8.2f} {rate:>13.0%}")


if __name__ == "__main__":
    main()
