"""Safety margin B - E each estimator needs to certify a given alpha.

Additive uniform model with width delta and `count` items.  Cantelli needs
sqrt(Var (1 - alpha) / alpha) with Var = count delta^2 / 3; the Chernoff
margin is found by root search.  A ratio below 1 means Chernoff admits
heavier solutions, so Chernoff-based runs should reach higher profit.
"""
from __future__ import annotations

import argparse
import math

from scipy.optimize import brentq

from cckp.bounds import chernoff_uniform_additive


def chernoff_margin(delta: float, count: int, alpha: float) -> float:
    top = delta * count
    if chernoff_uniform_additive(delta, count, 0.0, top * (1 - 1e-12)) > alpha:
        return top
    return brentq(lambda g: chernoff_uniform_additive(delta, count, 0.0, g) - alpha, 1e-9, top * (1 - 1e-12))


def cantelli_margin(delta: float, count: int, alpha: float) -> float:
    return math.sqrt(count * delta * delta / 3.0 * (1 - alpha) / alpha)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--delta", type=float, default=25.0)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0001, 0.001, 0.01, 0.05])
    ap.add_argument("--counts", type=int, nargs="+", default=[1, 2, 3, 5, 10, 30, 60, 100])
    args = ap.parse_args()

    print("alpha    " + "".join(f"{'c=' + str(c):>9}" for c in args.counts))
    for alpha in args.alphas:
        ratios = [chernoff_margin(args.delta, c, alpha) / cantelli_margin(args.delta, c, alpha) for c in args.counts]
        print(f"{alpha:<9g}" + "".join(f"{r:9.3f}" for r in ratios))
    print("(entries: chernoff margin / cantelli margin)")


if __name__ == "__main__":
    main()
