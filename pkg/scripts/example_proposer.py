"""Minimal external proposer for ``solar3d search --proposer exec:...``.

Reads one JSON request per line on stdin and answers with one JSON line
holding a ``geometry`` string.  It proposes high tables (two side walls and a
roof) filling the box footprint, raising the walls while scores improve and
lowering them after a guard violation or a worse score.

    solar3d search --proposer "exec:python scripts/example_proposer.py" --budget 20
"""

from __future__ import annotations

import json
import sys

from solar3d.baselines import HighTableParams, gen_high_table
from solar3d.geom import BoundingBox, serialize_geometry


def main() -> int:
    height, step, last_best = 1.0, 1.0, 0.0
    for line in sys.stdin:
        req = json.loads(line)
        box = BoundingBox(*req["box"])
        side = min(box.x_max, box.y_max)
        if req["last_guard_violation"] or (req["last_score_wh"] or 0.0) < last_best:
            height -= step
            step /= 2
        elif req["iteration"] > 1:
            height += step
        last_best = max(last_best, req["best_score_wh"] or 0.0)
        # never exceed the box or the area cap
        cap_height = (req["area_cap_m2"] - side * side) / (2 * side)
        height = max(0.1, min(height, box.z_max, cap_height))
        mesh = gen_high_table(HighTableParams(s=side, h=height), box=box)
        print(json.dumps({"geometry": serialize_geometry(mesh), "params": {"s": side, "h": height},
                          "family": "high-table"}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
