"""Generate the two point observations on the line for a chosen p, then recover p.

Prints the sup error of the recovered coefficient for a sequence of time
steps so the O(dt^2) behaviour is visible.
"""
import argparse

import numpy as np

from fracheat.freespace import recover_double
from fracheat.grids import LineGrid, TimeGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--p", default="sin(t)")
    ap.add_argument("--phi", default="exp(-x^2)")
    ap.add_argument("--f", default="exp(-x^2)*(1+t)")
    ap.add_argument("--L", type=float, default=40.0)
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--steps", type=int, nargs="+", default=[50, 100, 200, 400])
    args = ap.parse_args()

    line = LineGrid(args.L, args.N)
    prev = None
    for M in args.steps:
        res = recover_double(args.s, args.phi, args.f, 0.0, line, TimeGrid(1.0, M), p_true=args.p)
        err = res.diagnostics["p_error_sup"]
        order = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
        print(f"M={M:4d}  sup|p - p_true| = {err:.3e}{order}")
        prev = err


if __name__ == "__main__":
    main()
