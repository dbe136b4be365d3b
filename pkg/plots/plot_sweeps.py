#!/usr/bin/env python3
"""Render convergence figures from sweep CSVs (t, mean_dist, std_dist).

Reads one or more ensemble-mean distance curves and draws them on log-log
axes, either overlaid on a single axes or as side-by-side panels (one curve
per panel, the classic one-point-left / two-point-right comparison). Optional
guide lines show a target decay t^(-p/2), anchored at each curve's first
checkpoint; p is the mean-SQUARED-distance rate, and the plotted quantity is
the unsquared mean distance, hence the halved exponent.

Invocation:
    plot_sweeps.py sweep_a.csv sweep_b.csv --labels A B --out fig.png
    plot_sweeps.py --spec plotspec.json

The JSON spec mirrors the CLI: {"inputs": [...], "labels": [...],
"out": "fig.png", "layout": "overlay"|"panels", "logx": true, "logy": true,
"guides": [p1, p2, ...]}. The output format follows the file extension
(PNG or SVG). Inputs are never modified; rerunning overwrites the output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MalformedCsv(ValueError):
    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")


@dataclass
class Curve:
    ts: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    label: str


@dataclass
class PlotSpec:
    inputs: list[str]
    out: str
    labels: list[str] = field(default_factory=list)
    layout: str = "overlay"
    logx: bool = True
    logy: bool = True
    guides: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("need at least one input CSV")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("labels must match inputs one-to-one")
        if self.layout not in ("overlay", "panels"):
            raise ValueError(f"unknown layout {self.layout!r}")

    @classmethod
    def from_json(cls, path) -> "PlotSpec":
        data = json.loads(Path(path).read_text())
        return cls(inputs=list(data["inputs"]), out=str(data["out"]),
                   labels=list(data.get("labels", [])),
                   layout=str(data.get("layout", "overlay")),
                   logx=bool(data.get("logx", True)),
                   logy=bool(data.get("logy", True)),
                   guides=[float(g) for g in data.get("guides", [])])


def read_sweep_csv(path) -> Curve:
    """Strict reader for the sweep schema: header t,mean_dist,std_dist."""
    path = Path(path)
    if not path.is_file():
        raise MalformedCsv(path, 0, "file not found")
    ts, mean, std = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(path, 1, "empty file") from None
        if header[:3] != ["t", "mean_dist", "std_dist"]:
            raise MalformedCsv(path, 1, f"unexpected header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise MalformedCsv(path, lineno, f"expected 3 columns, got {len(row)}")
            try:
                t, m, s = int(row[0]), float(row[1]), float(row[2])
            except ValueError as exc:
                raise MalformedCsv(path, lineno, str(exc)) from None
            if not (np.isfinite(m) and np.isfinite(s)):
                raise MalformedCsv(path, lineno, "non-finite value")
            ts.append(t)
            mean.append(m)
            std.append(s)
    if len(ts) < 2:
        raise MalformedCsv(path, len(ts) + 1, "need at least two checkpoints")
    return Curve(ts=np.asarray(ts), mean=np.asarray(mean), std=np.asarray(std),
                 label=path.stem)


def align_curves(curves: list[Curve]) -> list[Curve]:
    """Restrict every curve to the common (coarsest) checkpoint grid."""
    common = set(curves[0].ts.tolist())
    for c in curves[1:]:
        common &= set(c.ts.tolist())
    if len(common) < 2:
        raise ValueError("input sweeps share fewer than two checkpoints")
    grid = np.asarray(sorted(common))
    out = []
    for c in curves:
        idx = np.searchsorted(c.ts, grid)
        out.append(Curve(ts=grid, mean=c.mean[idx], std=c.std[idx], label=c.label))
    return out


def guide_series(curve: Curve, sq_exponent: float) -> np.ndarray:
    """t^(-p/2) decay anchored at the curve's first checkpoint."""
    t0, m0 = curve.ts[0], curve.mean[0]
    return m0 * (curve.ts / t0) ** (-sq_exponent / 2.0)


def max_log_gap(curve: Curve, sq_exponent: float) -> float:
    """Largest |log(mean) - log(guide)| gap; small means the decays coincide."""
    guide = guide_series(curve, sq_exponent)
    return float(np.max(np.abs(np.log(curve.mean) - np.log(guide))))


def render(spec: PlotSpec) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curves = align_curves([read_sweep_csv(p) for p in spec.inputs])
    for label, curve in zip(spec.labels, curves):
        curve.label = label

    if spec.layout == "panels":
        fig, axes = plt.subplots(1, len(curves), figsize=(5.2 * len(curves), 4.2),
                                 sharey=True)
        axes = np.atleast_1d(axes)
    else:
        fig, ax = plt.subplots(figsize=(6.4, 4.4))
        axes = np.array([ax] * len(curves))

    for i, (curve, ax) in enumerate(zip(curves, axes)):
        ax.plot(curve.ts, curve.mean, label=curve.label)
        ax.fill_between(curve.ts, np.maximum(curve.mean - curve.std, 1e-300),
                        curve.mean + curve.std, alpha=0.2)
        if spec.guides:
            p = spec.guides[i] if i < len(spec.guides) else spec.guides[-1]
            ax.plot(curve.ts, guide_series(curve, p), "--", color="gray",
                    label=f"t^(-{p:g}/2) guide")
        if spec.logx:
            ax.set_xscale("log")
        if spec.logy:
            ax.set_yscale("log")
        ax.set_xlabel("iteration t")
        if spec.layout == "panels":
            ax.set_title(curve.label)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    axes[0].set_ylabel("mean distance to equilibrium")
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out


def build_spec(argv=None) -> PlotSpec:
    parser = argparse.ArgumentParser(description="plot sweep CSVs")
    parser.add_argument("inputs", nargs="*", help="sweep CSV files")
    parser.add_argument("--spec", help="JSON plot spec (overrides positional args)")
    parser.add_argument("--out", default="sweeps.png")
    parser.add_argument("--labels", nargs="*", default=[])
    parser.add_argument("--layout", choices=["overlay", "panels"], default="overlay")
    parser.add_argument("--guides", nargs="*", type=float, default=[])
    parser.add_argument("--linear-x", action="store_true")
    parser.add_argument("--linear-y", action="store_true")
    args = parser.parse_args(argv)
    if args.spec:
        return PlotSpec.from_json(args.spec)
    return PlotSpec(inputs=args.inputs, out=args.out, labels=args.labels,
                    layout=args.layout, guides=args.guides,
                    logx=not args.linear_x, logy=not args.linear_y)


def main(argv=None) -> int:
    try:
        spec = build_spec(argv)
        out = render(spec)
    except (MalformedCsv, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
