"""Classify an (alpha, beta) grid by H1-H4 and by the Chen-Wang conditions.

Prints the analytic admissible intervals, writes the grid table as CSV and,
if matplotlib is installed, a region plot.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from nicholson_periodic import SystemConfig, admissible_parameter_interval
from nicholson_periodic.cli import run_sweep

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=ROOT / "configs" / "paper_eq16.yaml")
    p.add_argument("--n", type=int, default=41, help="grid points per axis")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("--out", type=Path, default=Path("results"))
    args = p.parse_args()

    cfg = SystemConfig.load(args.config)
    for name in ("alpha", "beta"):
        lo, hi = admissible_parameter_interval(cfg.template(name))
        print(f"{name}: ({lo:.15g}, {hi:.15g})")

    alphas = [float(a) for a in np.linspace(0.25, 5.0, args.n)]
    betas = [float(b) for b in np.linspace(0.25, 3.0, args.n)]
    rows = run_sweep(cfg, [("alpha", alphas), ("beta", betas)], jobs=args.jobs)

    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "parameter_regions.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["alpha", "beta", "h_pass", "chen_wang_pass"])
        w.writeheader()
        w.writerows(rows)
    n_h = sum(r["h_pass"] for r in rows)
    n_cw = sum(bool(r["chen_wang_pass"]) for r in rows)
    print(f"{len(rows)} points: {n_h} pass H1-H4, {n_cw} pass Chen-Wang; table in {path}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    grid = np.array([r["h_pass"] for r in rows], dtype=float).reshape(len(alphas), len(betas))
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.pcolormesh(betas, alphas, grid, shading="nearest", cmap="Greens", vmin=0, vmax=1.5)
    ax.set_xlabel("beta")
    ax.set_ylabel("alpha")
    ax.set_title("H1-H4 satisfied (green)")
    fig.tight_layout()
    fig.savefig(args.out / "parameter_regions.png", dpi=150)


if __name__ == "__main__":
    main()
