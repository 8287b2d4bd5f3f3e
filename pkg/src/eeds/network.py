"""Static sensor topology, radio-range adjacency and encounter-graph metrics."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path


class TopologyError(ValueError):
    pass


class Position(NamedTuple):
    x: float
    y: float


HEAD = "head"
MEMBER = "member"


@dataclass(frozen=True)
class Node:
    id: int
    pos: Position
    residual_energy: float
    alive: bool
    role: str = MEMBER
    queue_size: int = 0


@dataclass
class Topology:
    """Node set stored column-wise; node ids are row indices.

    Treated as a read-only snapshot by every function in this package; the
    simulator builds a fresh one each round.
    """

    positions: np.ndarray  # (n, 2) metres
    energy: np.ndarray  # (n,) joules
    area: tuple[float, float]
    bs_pos: Position
    radio_range: float
    initial_energy: float
    heads: np.ndarray = field(default=None)  # (n,) bool, role this round
    queue_size: np.ndarray = field(default=None)  # (n,) int, encounter degree

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.energy = np.asarray(self.energy, dtype=float)
        n = len(self.positions)
        if self.energy.shape != (n,):
            raise TopologyError("energy must have one entry per node")
        if not self.radio_range > 0:
            raise TopologyError(f"radio_range must be positive, got {self.radio_range}")
        if not np.all(np.isfinite(self.positions)):
            raise TopologyError("node positions must be finite")
        self.bs_pos = Position(*map(float, self.bs_pos))
        self.area = (float(self.area[0]), float(self.area[1]))
        if self.heads is None:
            self.heads = np.zeros(n, dtype=bool)
        if self.queue_size is None:
            self.queue_size = np.zeros(n, dtype=int)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def alive(self) -> np.ndarray:
        return self.energy > 0

    @property
    def alive_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    @property
    def diagonal(self) -> float:
        return math.hypot(*self.area)

    def node(self, i: int) -> Node:
        if not 0 <= i < len(self):
            raise TopologyError(f"unknown node id {i}")
        return Node(
            id=int(i),
            pos=Position(*map(float, self.positions[i])),
            residual_energy=float(self.energy[i]),
            alive=bool(self.energy[i] > 0),
            role=HEAD if self.heads[i] else MEMBER,
            queue_size=int(self.queue_size[i]),
        )

    @property
    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(len(self))]

    def with_energy(self, energy: np.ndarray) -> "Topology":
        return Topology(
            self.positions, energy, self.area, self.bs_pos, self.radio_range,
            self.initial_energy, self.heads.copy(), self.queue_size.copy(),
        )

    def to_dict(self) -> dict:
        return {
            "area": list(self.area),
            "bs_pos": list(self.bs_pos),
            "radio_range": self.radio_range,
            "initial_energy": self.initial_energy,
            "nodes": [
                {"id": i, "x": float(x), "y": float(y), "energy": float(e)}
                for i, ((x, y), e) in enumerate(zip(self.positions, self.energy))
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Topology":
        nodes = sorted(doc["nodes"], key=lambda n: n["id"])
        ids = [n["id"] for n in nodes]
        if ids != list(range(len(nodes))):
            raise TopologyError("node ids must be 0..n-1 without gaps")
        return cls(
            positions=[(n["x"], n["y"]) for n in nodes],
            energy=[n["energy"] for n in nodes],
            area=tuple(doc["area"]),
            bs_pos=Position(*doc["bs_pos"]),
            radio_range=doc["radio_range"],
            initial_energy=doc.get("initial_energy", max(n["energy"] for n in nodes)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Topology":
        return cls.from_dict(json.loads(Path(path).read_text()))


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def distances_to(points: np.ndarray, target: Sequence[float]) -> np.ndarray:
    return np.hypot(points[:, 0] - target[0], points[:, 1] - target[1])


def neighbors(t: Topology, node_id: int) -> set[int]:
    """Alive nodes other than ``node_id`` within radio range (boundary inclusive)."""
    if not 0 <= node_id < len(t):
        raise TopologyError(f"unknown node id {node_id}")
    d = distances_to(t.positions, t.positions[node_id])
    hit = (d <= t.radio_range) & t.alive
    hit[node_id] = False
    return {int(i) for i in np.flatnonzero(hit)}


def centroid(positions: Iterable[Sequence[float]]) -> Position:
    pts = np.asarray(list(positions), dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise TopologyError("centroid of an empty set")
    return Position(float(pts[:, 0].mean()), float(pts[:, 1].mean()))


@dataclass(frozen=True)
class EncounterGraph:
    """Simple undirected graph over node ids, stored as a dense adjacency matrix
    indexed by position in ``vertices``."""

    vertices: tuple[int, ...]
    adjacency: np.ndarray

    @classmethod
    def from_edges(cls, vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> "EncounterGraph":
        vertices = tuple(sorted(set(int(v) for v in vertices)))
        index = {v: i for i, v in enumerate(vertices)}
        adj = np.zeros((len(vertices), len(vertices)), dtype=bool)
        for a, b in edges:
            if a == b:
                raise TopologyError(f"self-loop on {a}")
            adj[index[a], index[b]] = adj[index[b], index[a]] = True
        return cls(vertices, adj)

    @property
    def edges(self) -> set[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return {(self.vertices[a], self.vertices[b]) for a, b in zip(i, j)}

    @property
    def degrees(self) -> dict[int, int]:
        return dict(zip(self.vertices, self.adjacency.sum(axis=1).tolist()))

    def __len__(self) -> int:
        return len(self.vertices)


def build_encounter_graph(t: Topology) -> EncounterGraph:
    """Radio-range adjacency over alive nodes.

    Also writes each node's encounter degree into ``t.queue_size`` (zero for
    dead nodes).
    """
    ids = t.alive_ids
    pts = t.positions[ids]
    adj = pairwise_distances(pts) <= t.radio_range
    np.fill_diagonal(adj, False)
    q = np.zeros(len(t), dtype=int)
    q[ids] = adj.sum(axis=1)
    t.queue_size = q
    return EncounterGraph(tuple(int(i) for i in ids), adj)


def clustering_coefficient(g: EncounterGraph) -> float:
    """Mean local clustering; vertices of degree < 2 count as 0."""
    n = len(g)
    if n == 0:
        return 0.0
    a = g.adjacency.astype(np.int64)
    deg = a.sum(axis=1)
    links = ((a @ a) * a).sum(axis=1) // 2  # edges among each vertex's neighbours
    pairs = deg * (deg - 1) // 2
    # exact rational mean, so the result is the correctly rounded value
    total = sum((Fraction(int(l), int(p)) for l, p in zip(links, pairs) if p > 0), Fraction(0))
    return float(total / n)


def _hops(g: EncounterGraph) -> np.ndarray:
    return shortest_path(g.adjacency.astype(np.int8), method="D", directed=False, unweighted=True)


def average_path_length(g: EncounterGraph) -> float | None:
    """Mean hop count over connected ordered pairs; ``None`` if there are none."""
    if len(g) < 2:
        return None
    hops = _hops(g)
    off = ~np.eye(len(g), dtype=bool)
    finite = np.isfinite(hops) & off
    if not finite.any():
        return None
    return float(hops[finite].mean())


def disconnected_ratio(g: EncounterGraph) -> float:
    """Fraction of unordered vertex pairs with no connecting path."""
    n = len(g)
    if n < 2:
        return 0.0
    hops = _hops(g)
    broken = np.isinf(hops[np.triu_indices(n, 1)]).sum()
    return float(broken) / (n * (n - 1) / 2)


@dataclass(frozen=True)
class EncounterMetrics:
    cc: float
    pl: float | None
    dr: float
    node_count: int
    avg_degree: float


def encounter_metrics(g: EncounterGraph) -> EncounterMetrics:
    n = len(g)
    avg_deg = float(g.adjacency.sum() / n) if n else 0.0
    if n < 2:
        return EncounterMetrics(clustering_coefficient(g), None, 0.0, n, avg_deg)
    hops = _hops(g)
    off = ~np.eye(n, dtype=bool)
    finite = np.isfinite(hops) & off
    pl = float(hops[finite].mean()) if finite.any() else None
    dr = float(np.isinf(hops[np.triu_indices(n, 1)]).sum()) / (n * (n - 1) / 2)
    return EncounterMetrics(clustering_coefficient(g), pl, dr, n, avg_deg)
