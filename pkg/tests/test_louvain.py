import numpy as np
import pytest

from louvain_skills import (
    build_graph,
    extract_transition_graph,
    hierarchy_from_json,
    hierarchy_to_json,
    local_moves,
    modularity,
    move_gain,
    prune,
    run_louvain,
    update_partitions,
)
from louvain_skills.graph import induced_subgraph
from louvain_skills.louvain import ClusterHierarchy
from louvain_skills.modularity import Partition
from louvain_skills.environments import make_env

from helpers import brute_force_best, small_suite


@pytest.fixture(scope="module")
def rooms_graph():
    g, _ = extract_transition_graph(make_env("rooms"))
    return g


def test_reaches_brute_force_optimum_on_small_suite():
    for name, g in small_suite().items():
        for rho in (0.5, 1.0):
            best_q, _ = brute_force_best(g, rho)
            h = run_louvain(g, rho, seed=0)
            base = h.levels[-1].base if h.levels else list(range(g.n))
            q = modularity(g, dict(enumerate(base)), rho)
            assert q == pytest.approx(best_q, abs=1e-9), (name, rho)


def test_same_seed_same_hierarchy():
    g, _ = extract_transition_graph(make_env("hanoi", discs=3))
    h1 = run_louvain(g, 0.05, seed=3)
    h2 = run_louvain(g, 0.05, seed=3)
    assert [lvl.base for lvl in h1.levels] == [lvl.base for lvl in h2.levels]
    assert [lvl.assignment for lvl in h1.levels] == [lvl.assignment for lvl in h2.levels]


def test_levels_coarsen_and_improve(rooms_graph):
    h = run_louvain(rooms_graph, 0.05, seed=0)
    counts = h.cluster_counts()
    assert counts == sorted(counts, reverse=True)
    assert len(set(counts)) == len(counts)
    scores = [
        modularity(rooms_graph, dict(enumerate(lvl.base)), 0.05)
        for lvl in h.levels
    ]
    for a, b in zip(scores, scores[1:]):
        assert b > a


def test_local_moves_reach_single_move_maximum():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(5, 16))
        edges = []
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < 0.3:
                    edges.append((u, v, float(rng.uniform(0.2, 1.5))))
        if not edges:
            continue
        g = build_graph(n, edges)
        p = Partition.singletons(g)
        rho = float(rng.choice([0.5, 1.0]))
        before = modularity(g, dict(p.assignment), rho)
        local_moves(g, p, rho, order=list(range(n)))
        after = modularity(g, dict(p.assignment), rho)
        assert after >= before - 1e-12
        # no single reassignment can improve further
        for u in range(n):
            for c in list(p.clusters):
                if c != p.assignment[u]:
                    assert move_gain(g, p, u, c, rho) <= 1e-12


def test_prune_keeps_coarse_suffix(rooms_graph):
    h = run_louvain(rooms_graph, 0.05, seed=0)
    kept = prune(h, min_mean_cluster_size=4.0)
    counts = h.cluster_counts()
    kept_counts = kept.cluster_counts()
    assert kept_counts == [c for c in counts if rooms_graph.n / c >= 4.0]
    # retained levels are the original coarse levels, unchanged
    offset = len(counts) - len(kept_counts)
    for i, lvl in enumerate(kept.levels):
        assert lvl.base == h.levels[offset + i].base


def test_update_keeps_existing_memberships(rooms_graph):
    sub, nodes = induced_subgraph(rooms_graph, list(range(60)))
    assert nodes == list(range(60))
    h_sub = run_louvain(sub, 0.05, seed=0)
    h_full = update_partitions(rooms_graph, h_sub, 0.05)
    assert h_full.n_nodes == rooms_graph.n
    for i, lvl in enumerate(h_sub.levels):
        grown = h_full.levels[i]
        for u in range(60):
            assert grown.base[u] == lvl.base[u]


def test_update_from_empty_equals_fresh_clustering(rooms_graph):
    empty = ClusterHierarchy(n_nodes=0, rho=0.05, levels=[], graph=None)
    h = update_partitions(rooms_graph, empty, 0.05)
    assert h.n_nodes == rooms_graph.n
    assert h.level_count >= 1
    assert h.cluster_counts() == sorted(h.cluster_counts(), reverse=True)


def test_update_rejects_shrinking_graph(rooms_graph):
    h = run_louvain(rooms_graph, 0.05, seed=0)
    sub, _ = induced_subgraph(rooms_graph, list(range(60)))
    with pytest.raises(ValueError):
        update_partitions(sub, h, 0.05)


def test_hierarchy_json_round_trip(rooms_graph):
    h = prune(run_louvain(rooms_graph, 0.05, seed=0))
    h2 = hierarchy_from_json(hierarchy_to_json(h))
    assert h2.n_nodes == h.n_nodes
    assert h2.rho == h.rho
    assert h2.cluster_counts() == h.cluster_counts()
    for a, b in zip(h.levels, h2.levels):
        assert a.base == b.base
    # the per-level assignments must still compose into the bases
    for i, lvl in enumerate(h2.levels):
        if i == 0:
            assert [lvl.assignment[u] for u in range(h2.n_nodes)] == lvl.base
        else:
            prev = h2.levels[i - 1].base
            assert [lvl.assignment[c] for c in prev] == lvl.base
