from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeds.network import (
    EncounterGraph,
    Position,
    Topology,
    TopologyError,
    average_path_length,
    build_encounter_graph,
    centroid,
    clustering_coefficient,
    disconnected_ratio,
    distance,
    encounter_metrics,
    neighbors,
)

from oracles import brute_cc, brute_dr, brute_edges, brute_pl


def topo(points, energy=None, radio_range=1.0):
    energy = [0.1] * len(points) if energy is None else energy
    return Topology(points, energy, (10.0, 10.0), Position(5, 15), radio_range, 0.1)


def graph(n, edges):
    return EncounterGraph.from_edges(range(n), edges)


@st.composite
def random_graphs(draw, max_n=8):
    n = draw(st.integers(0, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return n, [p for p, keep in zip(pairs, mask) if keep]


# --- geometry -------------------------------------------------------------------


@pytest.mark.parametrize("a,b,d", [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0), ((1, 1), (4, 5), 5.0)])
def test_distance(a, b, d):
    assert distance(a, b) == d
    assert distance(b, a) == d


def test_centroid_examples():
    assert centroid([(2.5, -1)]) == (2.5, -1)
    assert centroid([(0, 0), (1, 0), (0, 1), (1, 1)]) == (0.5, 0.5)
    assert centroid([(0, 0), (6, 0), (0, 3)]) == (2, 1)
    with pytest.raises(TopologyError):
        centroid([])


def test_neighbors_examples():
    line = topo([(0, 0), (1, 0), (2, 0)])
    assert neighbors(line, 1) == {0, 2}
    assert neighbors(line, 0) == {1}
    lonely = topo([(0, 0), (5, 5), (9, 9)])
    assert neighbors(lonely, 0) == set()
    dead = topo([(0, 0), (0.5, 0), (1, 0)], energy=[0.1, 0.0, 0.1])
    assert neighbors(dead, 0) == {2}
    with pytest.raises(TopologyError):
        neighbors(line, 3)


def test_topology_rejects_bad_input():
    with pytest.raises(TopologyError):
        topo([(0, 0)], radio_range=0)
    with pytest.raises(TopologyError):
        topo([(0, 0), (1, 1)], energy=[0.1])
    with pytest.raises(TopologyError):
        topo([(0, float("nan"))])


def test_topology_json_round_trip(tmp_path):
    t = topo([(0.25, 1.5), (3, 4), (7.125, 9)], energy=[0.1, 0.05, 0.0])
    t.save(tmp_path / "t.json")
    back = Topology.load(tmp_path / "t.json")
    assert np.array_equal(back.positions, t.positions)
    assert np.array_equal(back.energy, t.energy)
    assert back.bs_pos == t.bs_pos and back.radio_range == t.radio_range
    node = back.node(2)
    assert not node.alive and node.residual_energy == 0.0


# --- encounter graph --------------------------------------------------------------


def test_build_graph_examples():
    t = topo([(0, 0), (1, 1)], radio_range=2)
    g = build_encounter_graph(t)
    assert g.edges == {(0, 1)}
    assert t.queue_size.tolist() == [1, 1]
    dead = topo([(0, 0), (1, 1)], energy=[0, 0], radio_range=2)
    assert len(build_encounter_graph(dead)) == 0


@pytest.mark.parametrize("seed", range(20))
def test_build_graph_matches_pair_scan(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 10, (10, 2))
    t = topo(pts, radio_range=3.0)
    g = build_encounter_graph(t)
    assert g.edges == brute_edges(pts.tolist(), 3.0)
    assert t.queue_size.tolist() == [g.degrees[i] for i in range(10)]


def test_graph_rejects_self_loop():
    with pytest.raises(TopologyError):
        graph(3, [(1, 1)])


@given(pts=st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), max_size=12))
def test_graph_is_simple_and_symmetric(pts):
    g = build_encounter_graph(topo(pts or [(0, 0)], radio_range=2.5))
    a = g.adjacency
    assert np.array_equal(a, a.T)
    assert not np.diag(a).any()


# --- metrics ------------------------------------------------------------------------


def test_cc_examples():
    assert clustering_coefficient(graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])) == 1.0
    assert clustering_coefficient(graph(5, [(0, k) for k in range(1, 5)])) == 0.0
    assert clustering_coefficient(graph(0, [])) == 0.0
    # triangle 0-1-2 with 3 hanging off 2: vertex 2 has one linked pair of three
    tri_pendant = graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    assert clustering_coefficient(tri_pendant) == pytest.approx((1 + 1 + Fraction(1, 3) + 0) / 4)


def test_pl_examples():
    assert average_path_length(graph(2, [(0, 1)])) == 1.0
    assert average_path_length(graph(3, [(0, 1), (1, 2)])) == pytest.approx(4 / 3)
    assert average_path_length(graph(3, [])) is None
    assert average_path_length(graph(1, [])) is None


def test_dr_examples():
    assert disconnected_ratio(graph(3, [(0, 1), (1, 2)])) == 0.0
    assert disconnected_ratio(graph(2, [])) == 1.0
    assert disconnected_ratio(graph(3, [(0, 1)])) == pytest.approx(2 / 3)
    assert disconnected_ratio(graph(1, [])) == 0.0


def test_metrics_bundle():
    m = encounter_metrics(graph(4, [(0, 1), (1, 2), (0, 2)]))
    assert (m.cc, m.pl, m.dr, m.node_count, m.avg_degree) == (0.75, 1.0, 0.5, 4, 1.5)


def test_atlas_graphs_match_brute_force():
    for g in nx.graph_atlas_g()[1:]:
        vs, es = list(g.nodes), list(g.edges)
        eg = EncounterGraph.from_edges(vs, es)
        pl = brute_pl(vs, es)
        assert clustering_coefficient(eg) == float(brute_cc(vs, es))
        assert average_path_length(eg) == (None if pl is None else float(pl))
        assert disconnected_ratio(eg) == float(brute_dr(vs, es))


@given(random_graphs())
def test_metrics_match_brute_force(g):
    n, es = g
    eg = graph(n, es)
    m = encounter_metrics(eg)
    pl = brute_pl(range(n), es)
    assert m.cc == float(brute_cc(range(n), es))
    assert m.pl == (None if pl is None else float(pl))
    assert m.dr == float(brute_dr(range(n), es))
    assert 0 <= m.cc <= 1 and 0 <= m.dr <= 1
    if m.pl is not None:
        assert m.pl >= 1
    if n >= 2:
        ref = nx.empty_graph(n)
        ref.add_edges_from(es)
        assert (m.dr == 0) == nx.is_connected(ref)


@given(random_graphs(), st.data())
def test_adding_edge_never_hurts_connectivity(g, data):
    n, es = g
    missing = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in es]
    if not missing:
        return
    extra = data.draw(st.sampled_from(missing))
    before, after = encounter_metrics(graph(n, es)), encounter_metrics(graph(n, es + [extra]))
    assert after.dr <= before.dr
    # every pair distance can only shrink once all pairs were already reachable
    if before.dr == 0:
        assert after.pl <= before.pl


def test_adding_bridge_can_raise_path_length():
    # two separate edges average 1 hop; bridging them adds 2- and 3-hop pairs
    split = graph(4, [(0, 1), (2, 3)])
    joined = graph(4, [(0, 1), (2, 3), (1, 2)])
    assert average_path_length(split) == 1.0
    assert average_path_length(joined) > 1.0
