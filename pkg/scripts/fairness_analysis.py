"""Residual-energy spread per protocol at checkpoint rounds.

Prints the raw population variance next to the coefficient of variation
(std / mean over alive nodes). The raw variance scales with the square of the
energy level, so comparing protocols that drain at different speeds on variance
alone mixes spread with depletion.

    python scripts/fairness_analysis.py --nodes 60 --side 120 --seeds 10
"""

import argparse

import numpy as np

from eeds.protocols import PROTOCOLS
from eeds.sim import ProtocolConfig, SimConfig, iter_rounds

CHECKS = (25, 50, 75, 100, 150)


def spread(cfg: SimConfig) -> dict[int, tuple[float, float, float]]:
    out = {}
    for state, m in iter_rounds(cfg):
        if m.round in CHECKS:
            e = state.topology.energy
            live = e[e > 0]
            cv = float(live.std() / live.mean()) if len(live) else float("nan")
            out[m.round] = (m.residual_variance, cv, m.total_residual)
        if m.round >= max(CHECKS):
            break
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=60)
    ap.add_argument("--side", type=float, default=120.0)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    results = {}
    for kind in PROTOCOLS:
        runs = [spread(SimConfig(node_count=args.nodes, area=(args.side, args.side),
                                 protocol=ProtocolConfig(kind), seed=s)) for s in range(args.seeds)]
        results[kind] = runs

    print(f"{'round':>5}  {'protocol':8s} {'var J^2':>10} {'cv':>7} {'total J':>8}")
    for r in CHECKS:
        for kind, runs in results.items():
            rows = np.array([run.get(r, (0.0, np.nan, 0.0)) for run in runs])
            var, cv, tot = np.nanmean(rows, axis=0)
            print(f"{r:5d}  {kind:8s} {var:10.3e} {cv:7.3f} {tot:8.3f}")
        print()
    e = [run.get(100, (0.0,))[0] for run in results["eeds"]]
    l = [run.get(100, (0.0,))[0] for run in results["leach"]]
    print(f"eeds variance <= leach at round 100 in {sum(a <= b for a, b in zip(e, l))}/{len(e)} seeds")


if __name__ == "__main__":
    main()
