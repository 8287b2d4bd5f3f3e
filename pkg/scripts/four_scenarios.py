"""Lifetime and fairness comparison over the {30, 60} nodes x {60, 120} m scenarios.

    python scripts/four_scenarios.py --seeds 10 --out results/scenarios
"""

import argparse
import time
from pathlib import Path

from eeds.cli import emit_artifacts
from eeds.protocols import PROTOCOLS
from eeds.sim import SimConfig, compare_runs, sweep_configs

SCENARIOS = [(n, side) for n in (30, 60) for side in (60.0, 120.0)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--rounds", type=int, default=500)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None, help="write CSVs per scenario here")
    args = ap.parse_args()

    for nodes, side in SCENARIOS:
        base = SimConfig(node_count=nodes, area=(side, side), rounds=args.rounds)
        start = time.perf_counter()
        table = compare_runs(sweep_configs(base, PROTOCOLS, range(args.seeds)), workers=args.workers)
        took = time.perf_counter() - start
        print(f"== {nodes} nodes, {side:g}x{side:g} m, {args.seeds} seeds ({took:.1f}s)")
        print(table.to_text())
        for name, row in table.rows.items():
            print(f"  {name:6s} FND per seed: {row.fnd}")
        e, l, f = (table.rows[k].fnd for k in ("eeds", "leach", "f3n"))
        print(f"  eeds > leach in {sum(a > b for a, b in zip(e, l))}/{len(e)} seeds, "
              f"eeds > f3n in {sum(a > b for a, b in zip(e, f))}/{len(e)}\n")
        if args.out:
            emit_artifacts(table, args.out / f"n{nodes}_a{int(side)}")


if __name__ == "__main__":
    main()
