"""Brute-force reference implementations used as test oracles.

Written straight from the textbook definitions and sharing no code with the
package: plain loops, exact fractions where it matters, dense sampling.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from fractions import Fraction

import numpy as np


# --- fuzzy ------------------------------------------------------------------


def mf_dense(kind: str, pts, xs: np.ndarray) -> np.ndarray:
    """Piecewise-linear membership on a dense grid, from the corner formula
    max(0, min(rise, 1, fall))."""
    if kind == "triangular":
        a, b, d = pts
        c = b
    else:
        a, b, c, d = pts
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rise = np.where(xs >= b, 1.0, (xs - a) / (b - a) if b > a else 0.0)
        fall = np.where(xs <= c, 1.0, (d - xs) / (d - c) if d > c else 0.0)
    mu = np.clip(np.minimum(rise, fall), 0.0, 1.0)
    mu[(xs < a) | (xs > d)] = 0.0
    return mu


def mf_point(kind: str, pts, x: float) -> float:
    return float(mf_dense(kind, pts, np.array([x]))[0])


def mamdani_oracle(system: dict, inputs: dict, n: int = 1_000_000) -> float:
    """Centroid of the MIN-MAX aggregate, integrated on ``n`` samples.

    ``system`` uses the JSON rule-base layout. Every rule is clipped and
    max-aggregated one at a time.
    """
    degree = {}
    for var in system["inputs"]:
        lo, hi = var["universe"]
        x = min(max(inputs[var["name"]], lo), hi)
        for t in var["terms"]:
            degree[(var["name"], t["name"])] = mf_point(t["kind"], t["points"], x)
    out = system["output"]
    lo, hi = out["universe"]
    xs = np.linspace(lo, hi, n)
    shapes = {t["name"]: mf_dense(t["kind"], t["points"], xs) for t in out["terms"]}
    agg = np.zeros(n)
    for rule in system["rules"]:
        w = min(degree[(v, t)] for v, t in rule["if"])
        np.maximum(agg, np.minimum(shapes[rule["then"]], w), out=agg)
    mass = np.trapezoid(agg, xs) if hasattr(np, "trapezoid") else np.trapz(agg, xs)
    if mass == 0:
        return 0.5 * (lo + hi)
    moment = np.trapezoid(agg * xs, xs) if hasattr(np, "trapezoid") else np.trapz(agg * xs, xs)
    return float(moment / mass)


def random_partition(rng: np.random.Generator, lo: float, hi: float, k: int) -> list[dict]:
    """``k`` overlapping terms covering [lo, hi] with random peaks and plateaus.

    Kinds are mixed: plateaus of zero width give triangles.
    """
    inner = np.sort(rng.uniform(lo, hi, k - 2)) if k > 2 else np.array([])
    peaks = [lo, *inner.tolist(), hi]
    terms = []
    for i in range(k):
        left = peaks[i - 1] if i else lo
        right = peaks[i + 1] if i < k - 1 else hi
        p = peaks[i]
        if rng.random() < 0.5:
            b = p - rng.uniform(0, 0.4) * (p - left)
            c = p + rng.uniform(0, 0.4) * (right - p)
            terms.append({"name": f"t{i}", "kind": "trapezoidal", "points": [left, b, c, right]})
        else:
            terms.append({"name": f"t{i}", "kind": "triangular", "points": [left, p, right]})
    return terms


def random_two_input_system(rng: np.random.Generator) -> dict:
    def var(name):
        lo = float(rng.uniform(-10, 10))
        hi = lo + float(rng.uniform(0.5, 20))
        return {"name": name, "universe": [lo, hi], "unit": "",
                "terms": random_partition(rng, lo, hi, int(rng.integers(2, 4)))}

    a, b, out = var("a"), var("b"), var("y")
    out["terms"] = random_partition(rng, *out["universe"], int(rng.integers(2, 5)))
    out_names = [t["name"] for t in out["terms"]]
    rules = [
        {"if": [["a", ta["name"]], ["b", tb["name"]]], "then": out_names[int(rng.integers(len(out_names)))]}
        for ta in a["terms"] for tb in b["terms"]
    ]
    return {"name": "toy", "description": "", "defuzz_samples": 1001,
            "inputs": [a, b], "output": out, "rules": rules}


# --- graphs -----------------------------------------------------------------


def _adj_lists(vertices, edges):
    adj = {v: set() for v in vertices}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def bfs_hops(adj, src) -> dict:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def brute_cc(vertices, edges) -> Fraction:
    adj = _adj_lists(vertices, edges)
    if not adj:
        return Fraction(0)
    total = Fraction(0)
    for v, nb in adj.items():
        k = len(nb)
        if k < 2:
            continue
        links = sum(1 for a, b in itertools.combinations(sorted(nb), 2) if b in adj[a])
        total += Fraction(links, k * (k - 1) // 2)
    return total / len(adj)


def brute_pl(vertices, edges) -> Fraction | None:
    adj = _adj_lists(vertices, edges)
    hops = []
    for s in adj:
        dist = bfs_hops(adj, s)
        hops += [d for t, d in dist.items() if t != s]
    if not hops:
        return None
    return Fraction(sum(hops), len(hops))


def brute_dr(vertices, edges) -> Fraction:
    adj = _adj_lists(vertices, edges)
    n = len(adj)
    if n < 2:
        return Fraction(0)
    reach = {s: bfs_hops(adj, s) for s in adj}
    broken = sum(1 for a, b in itertools.combinations(sorted(adj), 2) if b not in reach[a])
    return Fraction(broken, n * (n - 1) // 2)


def brute_edges(points, radius) -> set[tuple[int, int]]:
    out = set()
    for i, j in itertools.combinations(range(len(points)), 2):
        if math.dist(points[i], points[j]) <= radius:
            out.add((i, j))
    return out


# --- energy -----------------------------------------------------------------


def round_ledger(positions, energy, heads, bs, e_elec=50e-9, eps_amp=100e-12, e_da=5e-9, bits=2000):
    """Per-node energy paid in one data round, charges clipped at what each
    node holds. Nearest head wins, ties to the lower id. With no head every
    alive node sends straight to the base station."""
    n = len(positions)
    charge = [0.0] * n
    heads = sorted(heads)
    if not heads:
        for i in range(n):
            if energy[i] > 0:
                d = math.dist(positions[i], bs)
                charge[i] = e_elec * bits + eps_amp * bits * d * d
        return [min(c, max(e, 0.0)) for c, e in zip(charge, energy)]
    members = {h: [] for h in heads}
    for i in range(n):
        if energy[i] <= 0 or i in members:
            continue
        best = min(heads, key=lambda h: (math.dist(positions[i], positions[h]), h))
        members[best].append(i)
        d = math.dist(positions[i], positions[best])
        charge[i] += e_elec * bits + eps_amp * bits * d * d
    for h in heads:
        m = len(members[h])
        d = math.dist(positions[h], bs)
        charge[h] += m * e_elec * bits + e_da * bits * (m + 1) + e_elec * bits + eps_amp * bits * d * d
    return [min(c, max(e, 0.0)) for c, e in zip(charge, energy)]
