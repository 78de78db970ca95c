import math

import numpy as np
import pytest

from louvain_skills import (
    aggregate_graph,
    build_graph,
    extract_transition_graph,
    graph_from_json,
    graph_to_json,
    knn_graph,
    weakly_connected_components,
)
from louvain_skills.graph import induced_subgraph
from louvain_skills.environments import make_env

from helpers import undirected


def test_build_graph_merges_parallel_edges():
    g = build_graph(3, [(0, 1, 1.0), (0, 1, 2.5), (1, 2, 1.0)])
    assert g.weight(0, 1) == 3.5
    assert g.weight(1, 0) == 0.0
    assert g.edge_count == 2


def test_edges_iterate_in_sorted_order():
    g = build_graph(4, [(3, 0, 1.0), (0, 2, 1.0), (0, 1, 1.0), (2, 3, 1.0)])
    assert [e[:2] for e in g.edges()] == [(0, 1), (0, 2), (2, 3), (3, 0)]


def test_strengths_and_total_weight():
    g = build_graph(3, [(0, 1, 2.0), (1, 0, 1.0), (1, 2, 4.0), (2, 2, 3.0)])
    assert g.out_strength[1] == 5.0
    assert g.in_strength[1] == 2.0
    assert g.self_loop[2] == 3.0
    # the self-loop counts toward both of node 2's strengths
    assert g.out_strength[2] == 3.0
    assert g.in_strength[2] == 7.0
    assert g.total_weight == 10.0


def test_build_graph_rejects_out_of_range_nodes():
    with pytest.raises(ValueError):
        build_graph(2, [(0, 2, 1.0)])


def test_knn_graph_structure():
    rng = np.random.default_rng(3)
    pts = rng.random((40, 2))
    k, scale = 5, 4.0
    g = knn_graph(pts, k, scale)
    assert g.n == 40
    out_deg = [0] * g.n
    for u, v, w in g.edges():
        out_deg[u] += 1
        assert u != v
        assert 0.0 < w <= 1.0
        d2 = float(((pts[u] - pts[v]) ** 2).sum())
        assert w == pytest.approx(math.exp(-scale * d2), abs=1e-12)
        # symmetrised: the mirror edge exists with the same weight
        assert g.weight(v, u) == g.weight(u, v)
    assert all(d >= k for d in out_deg)


def test_knn_graph_rejects_bad_k():
    pts = np.zeros((4, 2))
    with pytest.raises(ValueError):
        knn_graph(pts, 0, 1.0)
    with pytest.raises(ValueError):
        knn_graph(pts, 4, 1.0)


def test_extract_transition_graph_rooms():
    env = make_env("rooms")
    g, idx = extract_transition_graph(env)
    states = idx.states()
    assert g.n == len(states) == 104
    assert states == sorted(states)
    # wall bumps are self-transitions and must not become edges
    assert all(s == 0.0 for s in g.self_loop)
    seen = {(u, v) for u, v, _ in g.edges()}
    expected = {
        (idx.id_of(s), idx.id_of(ns))
        for s, a, ns in env.enumerate()
        if ns != s
    }
    assert seen == expected


def test_extract_transition_graph_labels_states():
    env = make_env("hanoi", discs=3)
    g, idx = extract_transition_graph(env)
    assert g.n == 27
    assert list(g.node_labels) == [repr(s) for s in idx.states()]


def test_aggregate_graph_triangle_barbell():
    g = undirected(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])
    agg, cluster_ids = aggregate_graph(g, dict(enumerate([0, 0, 0, 1, 1, 1])))
    assert agg.n == 2
    assert cluster_ids == [0, 1]
    # six arcs inside each triangle, one arc each way across the bridge
    assert agg.self_loop[0] == 6.0
    assert agg.self_loop[1] == 6.0
    assert agg.weight(0, 1) == 1.0
    assert agg.weight(1, 0) == 1.0
    assert agg.total_weight == g.total_weight


def test_weakly_connected_components():
    g = build_graph(5, [(0, 1, 1.0), (2, 3, 1.0), (3, 2, 1.0)])
    comps = weakly_connected_components(g)
    assert sorted(sorted(c) for c in comps) == [[0, 1], [2, 3], [4]]


def test_induced_subgraph_remaps_ids():
    g = undirected(5, [(0, 1), (1, 2), (3, 4)])
    sub, nodes = induced_subgraph(g, [1, 2, 4])
    assert sub.n == 3
    assert nodes == [1, 2, 4]
    assert sub.weight(0, 1) == 1.0  # the 1-2 edge survives under new ids
    assert sub.weight(2, 0) == 0.0
    assert sub.edge_count == 2


def test_graph_json_round_trip():
    env = make_env("hanoi", discs=3)
    g, _ = extract_transition_graph(env)
    g2 = graph_from_json(graph_to_json(g))
    assert g2.n == g.n
    assert list(g2.edges()) == list(g.edges())
    assert g2.node_labels == g.node_labels
    assert g2.total_weight == g.total_weight
