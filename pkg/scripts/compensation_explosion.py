"""Statistical error of the loss-compensated direct scheme.

A coherent signal is scanned along the real axis at effective efficiency
eta*T, once at s=0 and once at the compensating setting s=1-eta*T. The
exact error of the reconstructed quasi value grows exponentially with the
distance from the signal amplitude in the compensated case.
"""

import argparse
import csv
import math
import sys

import numpy as np

from photocount.direct_scheme import counts_at, mapped_ordering
from photocount.phasespace import ordering_ratio
from photocount.states import Coherent
from photocount.stats import EstimatorKernel, ExperimentDesign, exact_moments


def quasi_error(signal, beta, eff, s, N):
    counts = counts_at(signal, beta, eff, K=200)
    k = EstimatorKernel(ordering_ratio(s) ** np.arange(counts.probs.size))
    mean, var = exact_moments(ExperimentDesign(counts.probs, N), k)
    scale = 2 * eff / (math.pi * (1 - s))
    return scale * mean, scale * math.sqrt(var)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha0", type=float, default=1.0)
    ap.add_argument("--efficiency", type=float, default=0.8)
    ap.add_argument("--N", type=int, default=1000)
    args = ap.parse_args()
    w = csv.writer(sys.stdout)
    w.writerow(["beta", "s", "ordering", "quasi", "error"])
    signal = Coherent(args.alpha0)
    for s in (0.0, 1 - args.efficiency):
        for b in np.linspace(-4, 4, 33):
            val, err = quasi_error(signal, b, args.efficiency, s, args.N)
            w.writerow([f"{b:.3f}", f"{s:.3f}", f"{mapped_ordering(s, args.efficiency):.4f}", f"{val:.6e}", f"{err:.6e}"])


if __name__ == "__main__":
    main()
