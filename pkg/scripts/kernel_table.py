"""Write the fractional heat kernel P(x, t) on a grid to CSV (columns x,t,P)."""
import argparse

import numpy as np

from fracheat.freespace import KernelEvaluator, kernel_mass
from fracheat.io import write_kernel_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--xmax", type=float, default=5.0)
    ap.add_argument("--nx", type=int, default=201)
    ap.add_argument("--times", type=float, nargs="+", default=[0.1, 0.5, 1.0, 2.0])
    ap.add_argument("--out", default="kernel.csv")
    args = ap.parse_args()

    ev = KernelEvaluator(args.s)
    x = np.linspace(-args.xmax, args.xmax, args.nx)
    times = np.array(args.times)
    write_kernel_table(args.out, x, times, ev.table(x, times))
    for t in times:
        print(f"t={t:g}  mass-1 = {kernel_mass(t, args.s, evaluator=ev) - 1:.2e}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
