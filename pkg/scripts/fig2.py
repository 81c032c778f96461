"""Grouped-bar data (mean profit per algorithm and alpha) from an experiment table."""
from __future__ import annotations

import argparse

from cckp.experiment import emit_fig2, read_table_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("table", help="table.csv written by an experiment run")
    ap.add_argument("--instance", required=True)
    ap.add_argument("--uncertainty", choices=["delta", "beta"], default="delta")
    ap.add_argument("--level", type=float, default=25.0)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    with open(args.table, encoding="utf-8") as fh:
        text = emit_fig2(read_table_csv(fh.read()), args.instance, args.uncertainty, args.level)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
