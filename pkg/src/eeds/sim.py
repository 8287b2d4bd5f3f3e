"""Seeded multi-round runs, lifetime statistics and protocol comparison."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .energy import RadioParams
from .network import Position, Topology
from .protocols import (
    DEFAULT_WINDOW,
    PROTOCOLS,
    Eeds,
    EedsParams,
    F3n,
    F3nParams,
    Leach,
    LeachParams,
    NetworkDepleted,
    RoundMetrics,
    SimState,
    residual_variance,
    run_round,
)

DEPLOY_STREAM = 0
ELECTION_STREAM = 1

CSV_HEADER = ("round", "alive", "total_residual_j", "residual_variance_j2", "ch_count", "cc", "pl", "dr")
CHECKPOINTS = tuple(range(50, 501, 50))


class ConfigError(ValueError):
    """Invalid simulation configuration; ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def default_radio_range(area: tuple[float, float]) -> float:
    # 15 m on 60x60, 30 m on 120x120
    return 0.25 * math.sqrt(area[0] * area[1])


def default_bs_pos(area: tuple[float, float]) -> Position:
    return Position(area[0] / 2, area[1] * 1.5)


@dataclass(frozen=True)
class ProtocolConfig:
    kind: str = "eeds"
    p: float = 0.05
    ch_fraction: float = 0.05
    threshold: float = 0.5

    def build(self):
        if self.kind == "leach":
            return Leach(LeachParams(self.p))
        if self.kind == "eeds":
            return Eeds(EedsParams(qualification_threshold=self.threshold, ch_fraction=self.ch_fraction))
        if self.kind == "f3n":
            return F3n(F3nParams(ch_fraction=self.ch_fraction))
        raise ConfigError("protocol", f"unknown protocol {self.kind!r}, expected one of {PROTOCOLS}")


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 30
    area: tuple[float, float] = (60.0, 60.0)
    initial_energy: float = 0.1
    rounds: int = 500
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    radio: RadioParams = field(default_factory=RadioParams)
    radio_range: float | None = None
    bs_pos: Position | None = None
    seed: int = 0
    window: int = DEFAULT_WINDOW

    def __post_init__(self) -> None:
        area = tuple(float(a) for a in self.area)
        object.__setattr__(self, "area", area)
        if self.radio_range is None:
            object.__setattr__(self, "radio_range", default_radio_range(area))
        if self.bs_pos is None:
            object.__setattr__(self, "bs_pos", default_bs_pos(area))
        else:
            object.__setattr__(self, "bs_pos", Position(*map(float, self.bs_pos)))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.node_count, int) or self.node_count < 1:
            raise ConfigError("nodes", f"must be an integer >= 1, got {self.node_count!r}")
        if not isinstance(self.rounds, int) or self.rounds < 1:
            raise ConfigError("rounds", f"must be an integer >= 1, got {self.rounds!r}")
        if not self.initial_energy > 0:
            raise ConfigError("energy", f"must be positive, got {self.initial_energy!r}")
        if len(self.area) != 2 or not all(a > 0 for a in self.area):
            raise ConfigError("area", f"must be two positive sizes, got {self.area!r}")
        if not self.radio_range > 0:
            raise ConfigError("radio_range", f"must be positive, got {self.radio_range!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed!r}")
        if not isinstance(self.window, int) or self.window < 1:
            raise ConfigError("window", f"must be an integer >= 1, got {self.window!r}")

    @property
    def label(self) -> str:
        return f"{self.protocol.kind}_seed{self.seed}"


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """PCG64 generator for one named stream of a run's seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def deploy(config: SimConfig) -> Topology:
    rng = rng_stream(config.seed, DEPLOY_STREAM)
    w, h = config.area
    pts = rng.random((config.node_count, 2)) * np.array([w, h])
    return Topology(
        positions=pts,
        energy=np.full(config.node_count, float(config.initial_energy)),
        area=config.area,
        bs_pos=config.bs_pos,
        radio_range=config.radio_range,
        initial_energy=float(config.initial_energy),
    )


@dataclass(frozen=True)
class LifetimeStats:
    fnd: int  # rounds + 1 when nobody died
    hnd: int | None
    lnd: int | None


def lifetime_stats(rows: Sequence[RoundMetrics], node_count: int, rounds: int) -> LifetimeStats:
    fnd = next((r.round for r in rows if r.alive < node_count), rounds + 1)
    hnd = next((r.round for r in rows if r.alive <= node_count / 2), None)
    lnd = next((r.round for r in rows if r.alive == 0), None)
    return LifetimeStats(fnd, hnd, lnd)


@dataclass
class RunResult:
    config: SimConfig
    rows: list[RoundMetrics]
    lifetime: LifetimeStats
    ledger: list[float] = field(default_factory=list, repr=False)  # energy paid per round


def iter_rounds(config: SimConfig, topology: Topology | None = None):
    """Yield ``(state, metrics)`` after every executed round."""
    topology = topology if topology is not None else deploy(config)
    protocol = config.protocol.build()
    rng = rng_stream(config.seed, ELECTION_STREAM)
    state = SimState.initial(topology, config.radio, config.window)
    for _ in range(config.rounds):
        try:
            state, metrics = run_round(state, protocol, rng)
        except NetworkDepleted:
            return
        yield state, metrics


def run_simulation(config: SimConfig, topology: Topology | None = None) -> RunResult:
    rows, ledger = [], []
    for state, metrics in iter_rounds(config, topology):
        rows.append(metrics)
        ledger.append(float(state.paid.sum()))
    return RunResult(config, rows, lifetime_stats(rows, config.node_count, config.rounds), ledger)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_csv(rows: Iterable[RoundMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [_fmt(v) for v in (r.round, r.alive, r.total_residual, r.residual_variance, r.ch_count, r.cc, r.pl, r.dr)]
        )
    return buf.getvalue()


# --- comparison -------------------------------------------------------------


def variance_at(result: RunResult, round_no: int) -> float:
    """Residual variance after ``round_no``; a run that stopped early has every
    node at 0 J from then on."""
    if round_no <= len(result.rows):
        return result.rows[round_no - 1].residual_variance
    return 0.0


def _censored(v: int | None, rounds: int) -> int:
    return rounds + 1 if v is None else v


@dataclass
class ComparisonRow:
    protocol: str
    seeds: list[int]
    fnd: list[int]
    hnd: list[int]
    lnd: list[int]
    variance: dict[int, list[float]]

    @property
    def mean_fnd(self) -> float:
        return float(np.mean(self.fnd))

    @property
    def mean_hnd(self) -> float:
        return float(np.mean(self.hnd))

    @property
    def mean_lnd(self) -> float:
        return float(np.mean(self.lnd))

    def mean_variance(self, round_no: int) -> float:
        return float(np.mean(self.variance[round_no]))


@dataclass
class ComparisonTable:
    rows: dict[str, ComparisonRow]
    checkpoints: tuple[int, ...]
    results: list[RunResult] = field(repr=False, default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        vcols = [f"var_r{c}" for c in self.checkpoints]
        w.writerow(["protocol", "seed", "fnd", "hnd", "lnd", *vcols])
        for name, row in self.rows.items():
            for k, seed in enumerate(row.seeds):
                w.writerow([name, seed, row.fnd[k], row.hnd[k], row.lnd[k],
                            *(_fmt(row.variance[c][k]) for c in self.checkpoints)])
            w.writerow([name, "mean", _fmt(row.mean_fnd), _fmt(row.mean_hnd), _fmt(row.mean_lnd),
                        *(_fmt(row.mean_variance(c)) for c in self.checkpoints)])
        return buf.getvalue()

    def to_text(self) -> str:
        head = ["protocol", "runs", "FND", "HND", "LND", *(f"var@{c}" for c in self.checkpoints)]
        body = [
            [name, str(len(r.seeds)), f"{r.mean_fnd:.1f}", f"{r.mean_hnd:.1f}", f"{r.mean_lnd:.1f}",
             *(f"{r.mean_variance(c):.3e}" for c in self.checkpoints)]
            for name, r in self.rows.items()
        ]
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(line, widths)) for line in [head, *body]]
        return "\n".join(lines) + "\n"


def _shared_key(c: SimConfig) -> tuple:
    d = asdict(c)
    d.pop("seed")
    d["protocol"].pop("kind")
    return repr(sorted(d.items()))


def compare_runs(configs: Sequence[SimConfig], workers: int = 1) -> ComparisonTable:
    """Run every config and tabulate lifetimes and residual variance per protocol.

    All protocols must cover the same seeds with otherwise identical settings.
    """
    if not configs:
        raise ConfigError("protocols", "nothing to compare")
    if len({_shared_key(c) for c in configs}) != 1:
        raise ConfigError("protocols", "configs differ in more than protocol and seed")
    by_proto: dict[str, list[int]] = {}
    for c in configs:
        by_proto.setdefault(c.protocol.kind, []).append(c.seed)
    seed_sets = {tuple(sorted(s)) for s in by_proto.values()}
    if len(seed_sets) != 1:
        raise ConfigError("seeds", "protocols were run on different seed sets")
    if any(len(set(s)) != len(s) for s in by_proto.values()):
        raise ConfigError("seeds", "duplicate seed for a protocol")

    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(run_simulation, configs))
    else:
        results = [run_simulation(c) for c in configs]

    rounds = configs[0].rounds
    checkpoints = tuple(c for c in CHECKPOINTS if c <= rounds) or (rounds,)
    rows: dict[str, ComparisonRow] = {}
    for res in sorted(results, key=lambda r: (r.config.protocol.kind, r.config.seed)):
        kind = res.config.protocol.kind
        row = rows.setdefault(kind, ComparisonRow(kind, [], [], [], [], {c: [] for c in checkpoints}))
        row.seeds.append(res.config.seed)
        row.fnd.append(res.lifetime.fnd)
        row.hnd.append(_censored(res.lifetime.hnd, rounds))
        row.lnd.append(_censored(res.lifetime.lnd, rounds))
        for c in checkpoints:
            row.variance[c].append(variance_at(res, c))
    ordered = {k: rows[k] for k in sorted(rows, key=lambda k: list(by_proto).index(k))}
    return ComparisonTable(ordered, checkpoints, results)


def sweep_configs(base: SimConfig, protocols: Sequence[str], seeds: Sequence[int]) -> list[SimConfig]:
    return [
        replace(base, protocol=replace(base.protocol, kind=kind), seed=int(s))
        for kind in protocols
        for s in seeds
    ]


__all__ = [
    "CSV_HEADER", "ComparisonTable", "ConfigError", "LifetimeStats", "ProtocolConfig", "RoundMetrics",
    "RunResult", "SimConfig", "compare_runs", "deploy", "iter_rounds", "lifetime_stats", "metrics_csv",
    "residual_variance", "run_simulation", "sweep_configs",
]
