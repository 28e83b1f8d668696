"""Where the open cube's energy comes from, face by face.

Panels here collect on their front face only.  The script compares the cube
with outward walls, the cube with inward walls, and their sum, which is what
a cube whose walls collect on both faces would score (each wall face is lit
independently, and back-to-back faces cannot bounce light onto each other).

    python scripts/cube_ratio_analysis.py [--step 6] [--subcell 0.25]
"""

from __future__ import annotations

import argparse
import sys

from solar3d.baselines import gen_flat, gen_open_cube
from solar3d.sim import SimConfig, simulate_day

FACES = ("floor", "south", "east", "north", "west")


def faces(per_triangle) -> dict[str, float]:
    return {f: float(per_triangle[2 * k] + per_triangle[2 * k + 1]) for k, f in enumerate(FACES)}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=6.0)
    ap.add_argument("--subcell", type=float, default=0.25)
    ap.add_argument("--s", type=float, default=10.0, help="cube side and height, m")
    args = ap.parse_args(argv)

    cfg = SimConfig(step_minutes=args.step, subcell_area=args.subcell)
    flat = simulate_day(gen_flat(args.s), cfg).energy_wh
    out = simulate_day(gen_open_cube(args.s, walls_out=True), cfg)
    inn = simulate_day(gen_open_cube(args.s, walls_out=False), cfg)
    walls_only = out.energy_wh - faces(out.per_triangle_wh)["floor"]

    print(f"flat panel, side {args.s:g} m: {flat:.0f} Wh")
    print(f"{'face':<8} {'walls out':>12} {'walls in':>12}")
    fo, fi = faces(out.per_triangle_wh), faces(inn.per_triangle_wh)
    for f in FACES:
        print(f"{f:<8} {fo[f] / flat:12.3f} {fi[f] / flat:12.3f}")
    print(f"{'total':<8} {out.energy_wh / flat:12.3f} {inn.energy_wh / flat:12.3f}")
    print()
    print(f"outward walls alone + inward cube = {(walls_only + inn.energy_wh) / flat:.3f} x flat")
    return 0


if __name__ == "__main__":
    sys.exit(main())
