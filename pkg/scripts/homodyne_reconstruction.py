"""Filtered back-projection of exact quadrature marginals.

Reports the maximum reconstruction error against the directly evaluated
Wigner function as a function of the filter cut-off and phase count.
"""

import argparse

import numpy as np

from photocount.homodyne import inverse_radon, radon_family
from photocount.phasespace import quasi_points
from photocount.states import Coherent, Fock, Vacuum, default_dim, to_density_matrix

STATES = {"vacuum": Vacuum(), "fock1": Fock(1), "fock2": Fock(2), "coherent": Coherent(1 + 0.5j)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--phases", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--cutoffs", type=float, nargs="+", default=[4.0, 6.0, 8.0, 10.0])
    args = ap.parse_args()
    x = np.linspace(-8, 8, 801)
    out = np.linspace(-3, 3, 61)
    print("state,phases,cutoff,max_error")
    for name, spec in STATES.items():
        rho = to_density_matrix(spec, default_dim(spec))
        for m in args.phases:
            fam = radon_family(rho, m, x)
            for c in args.cutoffs:
                w = inverse_radon(fam, c, out, out)
                err = np.max(abs(w.values - quasi_points(rho, w.points, 0.0)))
                print(f"{name},{m},{c:g},{err:.3e}")


if __name__ == "__main__":
    main()
