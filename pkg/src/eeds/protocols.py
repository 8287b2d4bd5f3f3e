"""Cluster-head election (EEDS, F3N, LEACH), cluster formation and the round step.

EEDS runs two fuzzy controllers. A local controller rates every alive node's
qualification from residual energy, neighbour count and distance to the
alive-node centroid; nodes under ``qualification_threshold`` are dropped. A
global controller then scores the survivors' cost from six inputs and the
``ceil(alive * ch_fraction)`` cheapest become heads. F3N ranks all alive
nodes by a single three-input controller. LEACH self-elects against the
rotating epoch threshold.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Mapping

import numpy as np

from . import fuzzy
from .energy import RadioParams, aggregation_cost, rx_cost, tx_cost
from .fuzzy import FuzzyInferenceSystem, LinguisticVariable, MembershipFunction
from .network import (
    EncounterGraph,
    EncounterMetrics,
    Topology,
    build_encounter_graph,
    distances_to,
    encounter_metrics,
)

DEFAULT_WINDOW = 5


class NetworkDepleted(RuntimeError):
    """No alive node is left; the simulation is over."""


# --- controllers ------------------------------------------------------------

UNIT = (0.0, 1.0)

GLOBAL_TERMS = {
    "tr_energy": ("Low", "High"),
    "r_energy": ("Low", "Medium", "High"),
    "q_size": ("small", "large"),
    "d_centroid": ("small", "large"),
    "e_rate": ("Small", "Medium", "High"),
    "proximity": ("small", "large"),
}
COST_TERMS = ("VL", "L", "LM", "HM", "H", "VH")

LOCAL_TERMS = {
    "r_energy": ("Low", "Medium", "High"),
    "neighbor_count": ("Few", "Medium", "Many"),
    "d_centroid": ("Near", "Medium", "Far"),
}
GRADE_TERMS = ("VeryLow", "Low", "Medium", "High", "VeryHigh")


def _unit_var(name: str, terms, unit: str = "normalized") -> LinguisticVariable:
    return LinguisticVariable(name, UNIT, fuzzy.ruspini_terms(terms, UNIT), unit)


def cost_variable() -> LinguisticVariable:
    """Six cost terms: VL is a left shoulder trapezoid, the rest triangles."""
    peaks = [i / 5 for i in range(6)]
    terms = [("VL", MembershipFunction.trapezoidal(0.0, 0.0, 0.0, peaks[1]))]
    for i, name in enumerate(COST_TERMS[1:], start=1):
        right = peaks[min(i + 1, 5)]
        terms.append((name, MembershipFunction.triangular(peaks[i - 1], peaks[i], right)))
    return LinguisticVariable("cost", UNIT, tuple(terms), "normalized")


def build_eeds_global_fis() -> FuzzyInferenceSystem:
    inputs = tuple(_unit_var(n, t) for n, t in GLOBAL_TERMS.items())
    out = cost_variable()
    rules = fuzzy.graded_rules(inputs, out, reversed_inputs={"r_energy"})
    return FuzzyInferenceSystem(
        "eeds_global", inputs, out, rules,
        description="EEDS global level: link cost, lower is a better head",
    )


def build_eeds_local_fis() -> FuzzyInferenceSystem:
    inputs = tuple(_unit_var(n, t) for n, t in LOCAL_TERMS.items())
    out = _unit_var("qualification", GRADE_TERMS)
    rules = fuzzy.graded_rules(inputs, out, reversed_inputs={"d_centroid"})
    return FuzzyInferenceSystem(
        "eeds_local", inputs, out, rules,
        description="EEDS local level: head qualification, higher is better",
    )


def build_f3n_fis() -> FuzzyInferenceSystem:
    inputs = tuple(_unit_var(n, t) for n, t in LOCAL_TERMS.items())
    out = _unit_var("chance", GRADE_TERMS)
    rules = fuzzy.graded_rules(inputs, out, reversed_inputs={"d_centroid"})
    return FuzzyInferenceSystem(
        "f3n", inputs, out, rules,
        description="F3N: head chance from residual power, neighbour degree and centroid distance",
    )


BUILDERS = {
    "eeds_global": build_eeds_global_fis,
    "eeds_local": build_eeds_local_fis,
    "f3n": build_f3n_fis,
}


@lru_cache(maxsize=None)
def packaged_fis(name: str) -> FuzzyInferenceSystem:
    """Controller loaded from the JSON tables shipped with the package."""
    path = resources.files("eeds") / "rulebases" / f"{name}.json"
    return fuzzy.fis_from_dict(json.loads(path.read_text()))


# --- features ---------------------------------------------------------------


@dataclass(frozen=True)
class NodeFeatures:
    tr_energy: float
    r_energy: float
    e_rate: float
    q_size: float
    d_centroid: float
    proximity: float
    neighbor_count: float


FEATURE_NAMES = tuple(NodeFeatures.__dataclass_fields__)


@dataclass(frozen=True)
class FeatureTable:
    """Per-node features for the alive nodes, one array per field."""

    ids: np.ndarray
    columns: Mapping[str, np.ndarray]
    normalized: bool = False

    def __getitem__(self, node_id: int) -> NodeFeatures:
        (row,) = np.flatnonzero(self.ids == node_id)
        return NodeFeatures(**{k: float(self.columns[k][row]) for k in FEATURE_NAMES})

    def __len__(self) -> int:
        return len(self.ids)

    def as_dict(self) -> dict[int, NodeFeatures]:
        return {int(i): self[int(i)] for i in self.ids}

    def matrix(self, names) -> np.ndarray:
        return np.column_stack([self.columns[n] for n in names])


def compute_features(
    t: Topology,
    history: np.ndarray | None,
    radio: RadioParams,
    graph: EncounterGraph | None = None,
) -> FeatureTable:
    """Raw features of every alive node.

    ``history`` holds the energy each node spent in recent rounds, one row per
    round (most recent last); its mean is the consumption rate.
    """
    ids = t.alive_ids
    if len(ids) == 0:
        raise NetworkDepleted("no alive nodes")
    if graph is None:
        graph = build_encounter_graph(t)
    pts = t.positions[ids]
    centre = pts.mean(axis=0)
    d_centroid = distances_to(pts, centre)
    if history is None or len(history) == 0:
        e_rate = np.zeros(len(ids))
    else:
        e_rate = np.asarray(history, dtype=float)[:, ids].mean(axis=0)
    degree = graph.adjacency.sum(axis=1).astype(float)
    pos = {v: k for k, v in enumerate(graph.vertices)}
    degree = degree[[pos[int(i)] for i in ids]]
    cols = {
        "tr_energy": tx_cost(radio, radio.packet_bits, d_centroid),
        "r_energy": t.energy[ids].astype(float),
        "e_rate": e_rate,
        "q_size": degree,
        "d_centroid": d_centroid,
        "proximity": distances_to(pts, t.bs_pos),
        "neighbor_count": degree.copy(),
    }
    return FeatureTable(ids, cols)


def _by_max(v: np.ndarray) -> np.ndarray:
    top = v.max() if len(v) else 0.0
    return v / top if top > 0 else np.zeros_like(v)


def normalize_features(features: FeatureTable, t: Topology) -> FeatureTable:
    """Scale every feature into [0, 1].

    Residual energy is divided by the initial energy, distances by the area
    diagonal and neighbour counts by ``alive - 1``. Per-packet transmit energy
    and consumption rate are divided by their largest value among the alive
    nodes this round: against the battery size both stay within a few percent
    of zero and would never leave their lowest term.
    """
    e0 = t.initial_energy
    diag = t.diagonal
    alive = len(t.alive_ids)
    per_peer = max(alive - 1, 1)
    c = features.columns
    scaled = {
        "tr_energy": _by_max(c["tr_energy"]),
        "r_energy": c["r_energy"] / e0,
        "e_rate": _by_max(c["e_rate"]),
        "q_size": c["q_size"] / per_peer,
        "d_centroid": c["d_centroid"] / diag,
        "proximity": c["proximity"] / diag,
        "neighbor_count": c["neighbor_count"] / per_peer,
    }
    scaled = {k: np.clip(v, 0.0, 1.0) for k, v in scaled.items()}
    return FeatureTable(features.ids, scaled, normalized=True)


def _fis_scores(fis: FuzzyInferenceSystem, table: FeatureTable) -> np.ndarray:
    return fuzzy.evaluate_batch(fis, table.matrix(fis.input_names))


def _single(fis: FuzzyInferenceSystem, f: NodeFeatures) -> float:
    return fuzzy.evaluate(fis, {n: getattr(f, n) for n in fis.input_names})


def eeds_local_qualification(f: NodeFeatures, local_fis: FuzzyInferenceSystem) -> float:
    return _single(local_fis, f)


def eeds_global_cost(f: NodeFeatures, global_fis: FuzzyInferenceSystem) -> float:
    return _single(global_fis, f)


def f3n_chance(f: NodeFeatures, f3n_fis: FuzzyInferenceSystem) -> float:
    return _single(f3n_fis, f)


# --- elections --------------------------------------------------------------


def head_count(alive: int, ch_fraction: float) -> int:
    return max(1, math.ceil(alive * ch_fraction)) if alive else 0


@dataclass(frozen=True)
class LeachParams:
    p: float = 0.05

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise ValueError(f"LEACH p must lie in (0, 1), got {self.p}")

    @property
    def epoch(self) -> int:
        return max(1, round(1 / self.p))


@dataclass(frozen=True)
class EedsParams:
    local_fis: FuzzyInferenceSystem = field(default_factory=lambda: packaged_fis("eeds_local"))
    global_fis: FuzzyInferenceSystem = field(default_factory=lambda: packaged_fis("eeds_global"))
    qualification_threshold: float = 0.5
    ch_fraction: float = 0.05

    def __post_init__(self) -> None:
        if not 0 <= self.qualification_threshold <= 1:
            raise ValueError("qualification_threshold must lie in [0, 1]")
        if not 0 < self.ch_fraction < 1:
            raise ValueError("ch_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class F3nParams:
    fis: FuzzyInferenceSystem = field(default_factory=lambda: packaged_fis("f3n"))
    ch_fraction: float = 0.05

    def __post_init__(self) -> None:
        if not 0 < self.ch_fraction < 1:
            raise ValueError("ch_fraction must lie in (0, 1)")


def _lowest(score: np.ndarray, ids: np.ndarray, k: int) -> set[int]:
    order = np.lexsort((ids, score))
    return {int(i) for i in ids[order[:k]]}


def eeds_elect(t: Topology, params: EedsParams, features: FeatureTable) -> set[int]:
    """``features`` must be normalised."""
    if len(features) == 0:
        raise NetworkDepleted("no alive nodes")
    qual = _fis_scores(params.local_fis, features)
    keep = qual >= params.qualification_threshold
    if not keep.any():
        keep[:] = True
    ids = features.ids[keep]
    sub = FeatureTable(ids, {k: v[keep] for k, v in features.columns.items()}, True)
    cost = _fis_scores(params.global_fis, sub)
    k = head_count(len(features), params.ch_fraction)
    return _lowest(cost, ids, k)


def f3n_elect(t: Topology, params: F3nParams, features: FeatureTable) -> set[int]:
    if len(features) == 0:
        raise NetworkDepleted("no alive nodes")
    chance = _fis_scores(params.fis, features)
    k = head_count(len(features), params.ch_fraction)
    return _lowest(-chance, features.ids, k)


def leach_threshold(round_index: int, p: LeachParams) -> float:
    return p.p / (1 - p.p * (round_index % p.epoch))


def leach_elect(
    round_index: int,
    served: np.ndarray,
    p: LeachParams,
    rng: np.random.Generator,
    alive: np.ndarray,
    energy: np.ndarray,
) -> tuple[set[int], np.ndarray]:
    """One LEACH self-election. Returns the heads and the updated epoch flags.

    ``round_index`` is zero-based. One uniform draw is consumed per deployed
    node every round, alive or not, so the random stream does not depend on
    deaths. If nobody self-elects, the eligible node with most residual energy
    is forced; if every alive node has already served this epoch the round
    has no head at all.
    """
    served = np.array(served, dtype=bool)
    if round_index % p.epoch == 0:
        served[:] = False
    draws = rng.random(len(served))
    eligible = alive & ~served
    heads = eligible & (draws < leach_threshold(round_index, p))
    if not heads.any() and eligible.any():
        cand = np.flatnonzero(eligible)
        heads[cand[np.argmax(energy[cand])]] = True
    served |= heads
    return {int(i) for i in np.flatnonzero(heads)}, served


# --- clusters and the round step --------------------------------------------


@dataclass(frozen=True)
class Cluster:
    head: int
    members: frozenset[int]


def form_clusters(ch_set, t: Topology) -> list[Cluster]:
    """Every alive non-head joins its nearest head; ties go to the lower head id."""
    heads = np.array(sorted(int(h) for h in ch_set), dtype=int)
    if len(heads) == 0:
        raise ValueError("cannot form clusters without a head")
    alive = t.alive.copy()
    alive[heads] = False
    others = np.flatnonzero(alive)
    groups: dict[int, set[int]] = {int(h): set() for h in heads}
    if len(others):
        diff = t.positions[others][:, None, :] - t.positions[heads][None, :, :]
        nearest = np.argmin(np.hypot(diff[..., 0], diff[..., 1]), axis=1)
        for node, k in zip(others, nearest):
            groups[int(heads[k])].add(int(node))
    return [Cluster(h, frozenset(m)) for h, m in groups.items()]


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    alive: int
    total_residual: float
    residual_variance: float
    ch_count: int
    cc: float
    pl: float | None
    dr: float


@dataclass(frozen=True)
class SimState:
    """Everything a round needs. Arrays are never mutated after construction."""

    topology: Topology
    radio: RadioParams
    window: int = DEFAULT_WINDOW
    round: int = 0  # rounds completed
    history: np.ndarray | None = None  # (<= window, n) energy spent per round
    served: np.ndarray | None = None  # LEACH epoch flags
    graph: EncounterGraph | None = None  # encounter graph of the current alive set
    encounter: EncounterMetrics | None = None  # metrics of ``graph``
    clusters: tuple[Cluster, ...] = ()
    charges: np.ndarray | None = None  # last round, before clipping
    paid: np.ndarray | None = None  # last round, after clipping

    @classmethod
    def initial(cls, topology: Topology, radio: RadioParams, window: int = DEFAULT_WINDOW) -> "SimState":
        n = len(topology)
        graph = build_encounter_graph(topology)
        return cls(
            topology, radio, window,
            history=np.zeros((0, n)),
            served=np.zeros(n, dtype=bool),
            graph=graph,
            encounter=encounter_metrics(graph),
        )


@dataclass(frozen=True)
class Leach:
    params: LeachParams = LeachParams()
    name: str = "leach"

    def elect(self, state: SimState, rng: np.random.Generator):
        t = state.topology
        return leach_elect(state.round, state.served, self.params, rng, t.alive, t.energy)


@dataclass(frozen=True)
class Eeds:
    params: EedsParams = field(default_factory=EedsParams)
    name: str = "eeds"

    def elect(self, state: SimState, rng: np.random.Generator):
        f = normalize_features(state_features(state), state.topology)
        return eeds_elect(state.topology, self.params, f), state.served

    def rulebases(self) -> dict[str, FuzzyInferenceSystem]:
        return {"local": self.params.local_fis, "global": self.params.global_fis}


@dataclass(frozen=True)
class F3n:
    params: F3nParams = field(default_factory=F3nParams)
    name: str = "f3n"

    def elect(self, state: SimState, rng: np.random.Generator):
        f = normalize_features(state_features(state), state.topology)
        return f3n_elect(state.topology, self.params, f), state.served

    def rulebases(self) -> dict[str, FuzzyInferenceSystem]:
        return {"f3n": self.params.fis}


def state_features(state: SimState) -> FeatureTable:
    return compute_features(state.topology, state.history, state.radio, state.graph)


def round_charges(t: Topology, clusters, radio: RadioParams) -> np.ndarray:
    """Energy each node owes for one data round, before clipping at zero.

    With no clusters every alive node reports straight to the base station.
    """
    bits = radio.packet_bits
    charges = np.zeros(len(t))
    if not clusters:
        ids = t.alive_ids
        charges[ids] = tx_cost(radio, bits, distances_to(t.positions[ids], t.bs_pos))
        return charges
    for c in clusters:
        members = np.array(sorted(c.members), dtype=int)
        if len(members):
            d = distances_to(t.positions[members], t.positions[c.head])
            charges[members] += tx_cost(radio, bits, d)
        d_bs = distances_to(t.positions[[c.head]], t.bs_pos)[0]
        charges[c.head] += (
            len(members) * rx_cost(radio, bits)
            + aggregation_cost(radio, bits, len(members) + 1)
            + tx_cost(radio, bits, d_bs)
        )
    return charges


def run_round(state: SimState, protocol, rng: np.random.Generator) -> tuple[SimState, RoundMetrics]:
    """Elect, cluster, charge the data round, then measure the new state."""
    t = state.topology
    if not t.alive.any():
        raise NetworkDepleted("no alive nodes")
    heads, served = protocol.elect(state, rng)
    clusters = tuple(form_clusters(heads, t)) if heads else ()
    charges = round_charges(t, clusters, state.radio)
    paid = np.minimum(charges, t.energy)
    energy = t.energy - paid

    new_t = t.with_energy(energy)
    new_t.heads = np.zeros(len(t), dtype=bool)
    new_t.heads[list(heads)] = True
    # nodes are static, so the graph only changes when someone dies
    if np.array_equal(new_t.alive, t.alive) and state.encounter is not None:
        graph, em = state.graph, state.encounter
    else:
        graph = build_encounter_graph(new_t)
        em = encounter_metrics(graph)
    history = np.vstack([state.history, paid[None, :]])[-state.window:] if state.window else state.history

    new_state = replace(
        state, topology=new_t, round=state.round + 1, history=history, served=served,
        graph=graph, encounter=em, clusters=clusters, charges=charges, paid=paid,
    )
    metrics = RoundMetrics(
        round=state.round + 1,
        alive=int(new_t.alive.sum()),
        total_residual=float(energy.sum()),
        residual_variance=residual_variance(energy),
        ch_count=len(heads),
        cc=em.cc,
        pl=em.pl,
        dr=em.dr,
    )
    return new_state, metrics


def residual_variance(energies) -> float:
    """Population variance of residual energy over all deployed nodes (dead at 0 J)."""
    e = np.asarray([getattr(n, "residual_energy", n) for n in energies], dtype=float)
    if e.size == 0:
        raise ValueError("variance of an empty node set")
    # exact rational arithmetic: equal energies give exactly 0
    return float(statistics.pvariance(np.clip(e, 0.0, None).tolist()))


PROTOCOLS = ("eeds", "f3n", "leach")
