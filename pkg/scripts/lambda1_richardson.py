"""Grid-refinement limit of the first Dirichlet eigenvalue on (-1, 1).

Prints lambda_1(n) for doubling n, the observed convergence order from
ratios of successive differences, and the Richardson-extrapolated limit.
"""
import argparse

import numpy as np
import scipy.linalg

from fracheat.grids import SpaceGrid
from fracheat.spectral import assemble_operator


def lambda1(s, n, a=-1.0, b=1.0):
    op = assemble_operator(s, SpaceGrid(a, b, n))
    return scipy.linalg.eigvalsh(op.dense(), subset_by_index=[0, 0])[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024, 2048])
    args = ap.parse_args()

    lams = np.array([lambda1(args.s, n) for n in args.sizes])
    for n, lam in zip(args.sizes, lams):
        print(f"n={n:5d}  lambda1={lam:.12f}")
    d = np.diff(lams)
    orders = np.log2(d[:-1] / d[1:])
    print("observed orders:", np.array2string(orders, precision=4))
    p = orders[-1]
    limit = lams[-1] + d[-1] / (2 ** p - 1)
    print(f"extrapolated limit (order {p:.3f}): {limit:.10f}")


if __name__ == "__main__":
    main()
