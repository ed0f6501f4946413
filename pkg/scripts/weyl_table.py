"""Ratio lambda_k / (k pi / |Omega|)^(2s) for several k and grid sizes."""
import argparse

from fracheat.grids import SpaceGrid
from fracheat.spectral import assemble_operator, eigendecompose, weyl_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024])
    ap.add_argument("--k", type=int, nargs="+", default=[1, 5, 10, 20, 40])
    args = ap.parse_args()

    print("s      n     " + "  ".join(f"k={k:<5d}" for k in args.k))
    for s in args.s:
        for n in args.sizes:
            sp = eigendecompose(assemble_operator(s, SpaceGrid(-1.0, 1.0, n)))
            row = "  ".join(f"{weyl_ratio(sp, k):.5f}" for k in args.k)
            print(f"{s:<5g}  {n:<5d} {row}")


if __name__ == "__main__":
    main()
