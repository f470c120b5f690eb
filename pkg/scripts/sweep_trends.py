#!/usr/bin/env python3
"""Error-scaling sweep on the real-valued model: MSE vs number of looks and
measurements, printed as a table and written to CSV."""

import argparse

from multilook.formats import write_sweep_csv
from multilook.theory import MleOptions, SweepConfig, sweep_mse


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--m", type=int, nargs="+", default=[128])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--looks", type=int, nargs="+", default=[1, 4, 16, 64])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output", default="sweep.csv")
    args = ap.parse_args()

    cfg = SweepConfig(
        n_grid=(args.n,),
        m_grid=tuple(args.m),
        k_grid=(args.k,),
        L_grid=tuple(args.looks),
        trials=args.trials,
        seed=args.seed,
        mle=MleOptions(iterations=300, restarts=4),
    )
    cells = sweep_mse(cfg)
    write_sweep_csv(args.output, cells)
    print(f"{'n':>5} {'m':>5} {'k':>3} {'L':>4} {'median MSE':>12} {'slope':>7}")
    for c in cells:
        slope = f"{c.slope:5.2f}" if c.slope is not None else "    -"
        print(f"{c.n:>5} {c.m:>5} {c.k:>3} {c.L:>4} {c.median_mse:>12.3e} {slope:>7}")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
