"""Honest-prover acceptance against depolarizing probability.

    python3 scripts/noise_sweep.py --instance 0 --shots 4000

Prints one CSV row per noise level: p, shots, accepts, rate, sigma.
At p = 1 every measured qubit is maximally mixed and the rate falls to 1/2.
"""

import argparse
import csv
import sys

import numpy as np

from poq import lattice, protocol, stats


def sweep(instance: int, levels, shots: int, seed: int):
    inst = lattice.builtin(instance)
    for p in levels:
        res = protocol.run_session(inst, "quantum", shots, p=float(p), seed=seed)
        yield p, res


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", type=int, default=0)
    ap.add_argument("--shots", type=int, default=4000)
    ap.add_argument("--steps", type=int, default=11)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["p", "shots", "accepts", "rate", "sigma"])
    for p, res in sweep(args.instance, np.linspace(0, 1, args.steps), args.shots, args.seed):
        writer.writerow([f"{p:.2f}", res.shots, res.accepts, f"{res.rate:.4f}",
                         f"{stats.sigma(res.shots):.4f}"])


if __name__ == "__main__":
    main()
