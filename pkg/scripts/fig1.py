"""Write crossover-variance curves (Var* against E for several epsilon) as CSV."""
from __future__ import annotations

import argparse

import numpy as np

from cckp.experiment import FIG1_EPSILONS, emit_fig1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=list(FIG1_EPSILONS))
    ap.add_argument("--e-max", type=float, default=50.0)
    ap.add_argument("--points", type=int, default=100)
    ap.add_argument("-o", "--output", default="results/fig1.csv")
    args = ap.parse_args()

    text = emit_fig1(args.eps, np.linspace(args.e_max / args.points, args.e_max, args.points))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
