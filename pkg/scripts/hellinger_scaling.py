"""n * H^2 between the center law and the oracle shift g1 + xi w, xi = 1/(sqrt(n) ||w||_2).

A bounded column means a single shifted law cannot be told apart from the
center with n samples.
"""

import argparse

from drbounds import NuisancePair
from drbounds.analysis import hellinger_single
from drbounds.functions import random_grid
from drbounds.nuisance_oracle import ErrorBudget
from drbounds.suite import build_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=4)
    args = ap.parse_args()

    center = NuisancePair.of(random_grid(0.3, 0.7, 16, seed=1), random_grid(0.3, 0.7, 16, seed=2),
                             random_grid(0.3, 0.7, 16, seed=3), c=0.1)
    w = random_grid(0.5, 1.5, 16, seed=args.seed)
    vals = []
    for k in range(6, 15):
        n = 2**k
        fam = build_family(center, w, "OracleShift", ErrorBudget.uniform(0.0), 0, n=n)
        nh = n * hellinger_single(center, fam.pair())
        vals.append(nh)
        print(f"n=2^{k:<2d}  xi={fam.params.xi:.3e}  n*H^2={nh:.5f}")
    print(f"max/min = {max(vals) / min(vals):.3f}")


if __name__ == "__main__":
    main()
