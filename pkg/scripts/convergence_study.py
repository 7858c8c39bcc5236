"""Step-size study: terminal error, periodicity residual and orbit defect against h."""

import argparse
import math
from pathlib import Path

import numpy as np

from nicholson_periodic import SystemConfig, find_periodic, integrate

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=ROOT / "configs" / "paper_eq16.yaml")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--t-final", type=float, default=40 * math.pi)
    args = p.parse_args()

    cfg = SystemConfig.load(args.config)
    sys_ = cfg.build({"alpha": args.alpha, "beta": args.beta})
    hist = cfg.simulation.history_segment(sys_)
    T = args.t_final

    steps = [sys_.omega / n for n in (64, 128, 256, 512)]
    ref = np.array(integrate(sys_, hist, T, steps[-1] / 8)(T))
    print(f"{'h':>12} {'terminal err':>14} {'ratio':>8} {'residual':>11} {'defect':>11} {'periods':>8}")
    prev = None
    for h in steps:
        err = float(np.max(np.abs(np.array(integrate(sys_, hist, T, h)(T)) - ref)))
        orbit = find_periodic(sys_, hist, h=h)
        ratio = f"{prev / err:8.2f}" if prev else " " * 8
        print(f"{h:12.6f} {err:14.3e} {ratio} {orbit.residual:11.3e} {orbit.defect:11.3e} {orbit.periods:8d}")
        prev = err


if __name__ == "__main__":
    main()
