"""Seeded builtin-proposer campaign: one ledger per seed plus a summary.

    python scripts/search_campaign.py --runs 20 --budget 200 --out runs/

Defaults match the footprint of the 10 m flat reference: a 10 x 10 x 10 m box,
a 500 m^2 (5x) area cap, half-hour steps and 1 m^2 sub-cells.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from solar3d.baselines import gen_flat
from solar3d.geom import BoundingBox
from solar3d.guards import GuardConfig
from solar3d.search import builtin_propose, run_search, write_ledger
from solar3d.sim import SimConfig, simulate_day


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--budget", type=int, default=200)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--box", type=float, nargs=3, default=[10.0, 10.0, 10.0])
    ap.add_argument("--cap-multiple", type=float, default=5.0, help="area cap in units of the box footprint")
    ap.add_argument("--step", type=float, default=30.0)
    ap.add_argument("--subcell", type=float, default=1.0)
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("--out", type=Path, help="directory for seed_<n>.jsonl ledgers")
    args = ap.parse_args(argv)

    box = BoundingBox(*args.box)
    footprint = box.x_max * box.y_max
    guard = GuardConfig(area_cap=args.cap_multiple * footprint, box=box)
    sim = SimConfig(step_minutes=args.step, subcell_area=args.subcell)
    flat = simulate_day(gen_flat(min(box.x_max, box.y_max)), sim).energy_wh
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)

    def propose(history, rng):
        return builtin_propose(history, rng, epsilon=args.epsilon)

    summary = []
    for seed in range(args.first_seed, args.first_seed + args.runs):
        t0 = time.perf_counter()
        led = run_search(propose, args.budget, sim, guard, seed=seed, clock=None)
        best = led.best
        row = {"seed": seed, "best_i": best.i, "best_wh": best.score_wh, "ratio_to_flat": best.score_wh / flat,
               "family": led.best_proposal.family if led.best_proposal else None,
               "params": led.best_proposal.params if led.best_proposal else None,
               "seconds": round(time.perf_counter() - t0, 2)}
        summary.append(row)
        print(f"seed {seed:3d}  best {row['ratio_to_flat']:.3f} x flat at #{best.i:<4d} "
              f"{row['family']}  ({row['seconds']:.1f} s)", flush=True)
        if args.out:
            write_ledger(args.out / f"seed_{seed}.jsonl", led)

    ratios = np.array([r["ratio_to_flat"] for r in summary])
    print(f"\nflat reference {flat:.0f} Wh; best/flat min {ratios.min():.3f} median {np.median(ratios):.3f} "
          f"max {ratios.max():.3f}; runs >= 1.5x: {(ratios >= 1.5).sum()}/{len(ratios)}")
    if args.out:
        (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
