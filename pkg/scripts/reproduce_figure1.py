#!/usr/bin/env python3
"""Reproduce the convergence-comparison experiment end to end.

Runs the one-point and two-point 20-seed sweeps on the interior-equilibrium
control game (the pinned configs under configs/), then prints where each
feedback mode first drives the mean distance below 0.1. Pass --plot to also
render the two-panel figure via the separate plots package (requires
matplotlib).

Usage:
    python scripts/reproduce_figure1.py [--out runs/figure1] [--plot]
"""

import argparse
import csv
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def first_crossing(csv_path, threshold=0.1):
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        if float(row["mean_dist"]) < threshold:
            return int(row["t"])
    return None


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(REPO / "runs" / "figure1"))
    parser.add_argument("--plot", action="store_true",
                        help="render the two-panel figure (needs matplotlib)")
    args = parser.parse_args()
    out = Path(args.out)

    sweeps = {}
    for mode, config in (("one-point", "case1-one-point.json"),
                         ("two-point", "case1-two-point.json")):
        dest = out / mode.replace("-", "_")
        print(f"== sweep: {mode} (20 seeds, horizon 1e5) -> {dest}")
        rc = subprocess.call([sys.executable, "-m", "gnelearn.cli", "sweep",
                              "--config", str(REPO / "configs" / config),
                              "--out", str(dest)])
        if rc != 0:
            return rc
        sweeps[mode] = dest / "sweep_mean.csv"

    for mode, path in sweeps.items():
        t = first_crossing(path)
        print(f"{mode}: mean distance first below 0.1 at t = {t}")

    if args.plot:
        figure = out / "figure1.png"
        rc = subprocess.call([sys.executable, str(REPO / "plots" / "plot_sweeps.py"),
                              str(sweeps["one-point"]), str(sweeps["two-point"]),
                              "--labels", "one-point", "two-point",
                              "--out", str(figure)])
        if rc != 0:
            return rc
        print(f"figure written to {figure}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
