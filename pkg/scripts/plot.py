"""Optional plots from CLI CSV output. Needs matplotlib, which the package does not."""

import argparse
import csv
from pathlib import Path


def read(path: Path) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def plot_crossover(rows, out: Path, plt) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    for n in sorted({int(r["N"]) for r in rows}):
        pts = sorted((int(r["T"]), int(r["statefl_gas"])) for r in rows if int(r["N"]) == n)
        ax.plot([t for t, _ in pts], [g for _, g in pts], label=f"StateFL N={n}", lw=0.8)
    cc = sorted({(int(r["T"]), int(r["cc_commit_gas"])) for r in rows})
    ax.plot([t for t, _ in cc], [g for _, g in cc], "k--", lw=2, label="CC commits")
    ax.set(xscale="log", yscale="log", xlabel="rounds T", ylabel="gas")
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out / "crossover.png", dpi=150)


def plot_circuits(rows, out: Path, plt) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    x = [int(r["N"]) * int(r["T"]) for r in rows]
    for cid in ("transition", "challenge", "distribution"):
        ax.plot(x, [int(r[cid]) for r in rows], "o-", label=cid)
    ax.set(xlabel="N*T", ylabel="constraints")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "circuits.png", dpi=150)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("dir", type=Path, help="directory written by `settlefl costs` / `settlefl circuits`")
    args = ap.parse_args()
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if (args.dir / "crossover.csv").exists():
        plot_crossover(read(args.dir / "crossover.csv"), args.dir, plt)
    if (args.dir / "circuits.csv").exists():
        plot_circuits(read(args.dir / "circuits.csv"), args.dir, plt)


if __name__ == "__main__":
    main()
