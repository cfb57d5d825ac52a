"""Cat-state quasidistributions at several orderings.

Writes one CSV grid per ordering and prints how the interference fringe at
the origin shrinks as the ordering moves from Wigner towards Q.
"""

import argparse
import pathlib

import numpy as np

from photocount.phasespace import quasi_grid
from photocount.states import Cat, default_dim, to_density_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=3.0, help="cat amplitude (imaginary axis)")
    ap.add_argument("--orderings", type=float, nargs="+", default=[0.0, -0.1, -0.3, -1.0])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results/cat"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    spec = Cat(1j * args.alpha)
    rho = to_density_matrix(spec, default_dim(spec))
    ax = np.linspace(-5, 5, 201)
    for s in args.orderings:
        g = quasi_grid(rho, ax, ax, s)
        with open(args.out / f"cat_s{s:+.2f}.csv", "w") as fh:
            g.to_csv(fh)
        centre = g.values[100, 100]
        print(f"s={s:+.2f}  W(0)={centre:+.6e}  min={g.values.min():+.4e}  integral={g.integral():.6f}")


if __name__ == "__main__":
    main()
