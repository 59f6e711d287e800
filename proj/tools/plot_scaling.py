#!/usr/bin/env python3
"""Render scaling figures from one or more telemetry JSONL files.

Each input file is the per-epoch telemetry stream written by
`gapfm train --telemetry`. Three figures are produced:

  1. objective (or validation gap) over iterations, one line per run
  2. user-phase time per epoch, one line per run
  3. item-phase time per epoch, one line per run

Usage:
  plot_scaling.py run1.jsonl run2.jsonl ... -o out_prefix
"""

import argparse
import json
import pathlib
import sys


def load_run(path):
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    if not records:
        raise SystemExit(f"{path}: no telemetry records")
    return records


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("telemetry", nargs="+", help="telemetry JSONL files")
    parser.add_argument("-o", "--output", default="scaling",
                        help="output file prefix")
    args = parser.parse_args()

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise SystemExit("matplotlib is required to render the figures")

    runs = {pathlib.Path(p).stem: load_run(p) for p in args.telemetry}

    figures = [
        ("progress", "objective",
         lambda r: r.get("validation_gap", r.get("objective"))),
        ("u_phase", "user-phase ms/epoch", lambda r: r["u_phase_ms"]),
        ("v_phase", "item-phase ms/epoch", lambda r: r["v_phase_ms"]),
    ]
    for suffix, ylabel, pick in figures:
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, records in runs.items():
            xs = [r["iteration"] for r in records]
            ys = [pick(r) for r in records]
            if any(y is None for y in ys):
                continue
            ax.plot(xs, ys, marker="o", markersize=3, label=name)
        ax.set_xlabel("iteration")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
        fig.tight_layout()
        out = f"{args.output}_{suffix}.png"
        fig.savefig(out, dpi=150)
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
