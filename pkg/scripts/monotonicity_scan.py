"""Scan the packaged controllers for monotonicity violations on a grid.

For each input axis, sweeps ``--points`` values with the other inputs fixed at
every combination of ``--levels`` values, and reports how many sweeps move
against the expected direction and by how much.

    python scripts/monotonicity_scan.py --levels 3 --points 21
"""

import argparse
import itertools

import numpy as np

from eeds import fuzzy
from eeds.protocols import packaged_fis

# +1: output should not fall as the input rises; -1: should not rise
DIRECTIONS = {
    "eeds_global": {"tr_energy": 1, "r_energy": -1, "q_size": 1, "d_centroid": 1, "e_rate": 1, "proximity": 1},
    "eeds_local": {"r_energy": 1, "neighbor_count": 1, "d_centroid": -1},
    "f3n": {"r_energy": 1, "neighbor_count": 1, "d_centroid": -1},
}


def scan(name: str, levels: int, points: int, eps: float = 1e-12):
    fis = packaged_fis(name)
    sweep = np.linspace(0, 1, points)
    fixed_values = np.linspace(0, 1, levels)
    for axis, var in enumerate(fis.input_names):
        sign = DIRECTIONS[name][var]
        bad, worst = 0, 0.0
        combos = list(itertools.product(fixed_values, repeat=len(fis.inputs) - 1))
        for fixed in combos:
            X = np.tile(np.insert(np.array(fixed), axis, 0.0), (points, 1))
            X[:, axis] = sweep
            step = sign * np.diff(fuzzy.evaluate_batch(fis, X))
            if step.min() < -eps:
                bad += 1
                worst = min(worst, float(step.min()))
        yield var, bad, len(combos), worst


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=3, help="grid values for the fixed inputs")
    ap.add_argument("--points", type=int, default=21, help="samples along the swept input")
    args = ap.parse_args()
    for name in DIRECTIONS:
        print(f"{name}:")
        for var, bad, total, worst in scan(name, args.levels, args.points):
            print(f"  {var:15s} {bad:4d}/{total:<5d} sweeps violate, worst step {worst:+.4f}")


if __name__ == "__main__":
    main()
