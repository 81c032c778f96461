"""Run an experiment config and print the mean table in a compact layout.

    python3 scripts/run_grid.py configs/acceptance.json --output-dir results/acceptance
"""
from __future__ import annotations

import argparse
from pathlib import Path

from cckp.experiment import ExperimentConfig, run_matrix


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", type=Path)
    ap.add_argument("--output-dir")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig.load(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.master_seed = args.seed
    table = run_matrix(cfg, base_dir=args.config.parent, workers=args.workers)

    width = max(len(a) for a in table.algorithms) + 2
    print(f"{'instance':>10} {'unc':>5} {'level':>6} {'alpha':>7} " + "".join(f"{a:>{width}}" for a in table.algorithms))
    for row in table.rows:
        cells = "".join(
            f"{row.cells[a].mean:>{width}.1f}" if a in row.cells else " " * width for a in table.algorithms
        )
        print(f"{row.instance:>10} {row.uncertainty:>5} {row.level:>6g} {row.alpha:>7g} {cells}")
    print(f"raw records and table.csv in {cfg.output_dir}")


if __name__ == "__main__":
    main()
