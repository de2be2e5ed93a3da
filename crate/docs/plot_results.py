"""Plot a dmimo-sim result bundle: constellations, channel estimates and
per-trial EVM.

    python docs/plot_results.py results/reproduction [out.png]
"""

import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

MODES = ["Single1", "Single2", "NCJT", "CJT"]


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def main():
    bundle = Path(sys.argv[1] if len(sys.argv) > 1 else "results")
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else bundle / "summary.png"
    result = json.loads((bundle / "result.json").read_text())
    summaries = {s["mode"]: s for s in result["summaries"]}
    modes = [m for m in MODES if (bundle / f"constellation_{m}.csv").exists()]

    fig, axes = plt.subplots(2, max(len(modes), 2), figsize=(4 * max(len(modes), 2), 8))
    for ax, mode in zip(axes[0], modes):
        rows = read_csv(bundle / f"constellation_{mode}.csv")
        ax.scatter([float(r["i"]) for r in rows], [float(r["q"]) for r in rows], s=1)
        lim = 1.5 if mode != "NCJT" else None
        if lim:
            ax.set_xlim(-lim, lim)
            ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.set_title(f"{mode}: EVM {summaries[mode]['mean_evm_pct']:.2f}%")

    ax = axes[1][0]
    for i in (1, 2):
        path = bundle / f"chest_trxp{i}.csv"
        if path.exists():
            rows = read_csv(path)
            k = [int(r["subcarrier"]) for r in rows]
            ax.plot(k, [float(r["magnitude"]) for r in rows], ".", ms=2, label=f"TRxP {i} raw")
            ax.plot(k, [float(r["smoothed_magnitude"]) for r in rows], label=f"TRxP {i} smoothed")
    ax.set_xlabel("subcarrier")
    ax.set_ylabel("|H|")
    ax.legend()

    ax = axes[1][1]
    trials = read_csv(bundle / "trials.csv")
    for mode in modes:
        evm = [float(r["evm_pct"]) for r in trials if r["mode"] == mode and r["evm_pct"]]
        ax.plot(evm, ".", label=mode)
    ax.set_yscale("log")
    ax.set_xlabel("trial")
    ax.set_ylabel("EVM %")
    ax.legend()
    for ax in axes[1][2:]:
        ax.axis("off")

    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
