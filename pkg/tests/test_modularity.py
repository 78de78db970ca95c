import numpy as np
import pytest

from louvain_skills import build_graph, modularity, move_gain
from louvain_skills.modularity import Partition

from helpers import undirected


def triangle_barbell():
    return undirected(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])


def test_single_cluster_value():
    # everything in one cluster: e = 1, a = 1, so q = 1 - rho
    g = triangle_barbell()
    one = {u: 0 for u in range(6)}
    assert modularity(g, one, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert modularity(g, one, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_two_triangle_value():
    # each triangle holds 6 of 14 arcs and touches 7: q = 6/7 - rho/2
    g = triangle_barbell()
    two = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    assert modularity(g, two, 1.0) == pytest.approx(6 / 7 - 0.5, abs=1e-12)
    assert modularity(g, two, 0.5) == pytest.approx(6 / 7 - 0.25, abs=1e-12)


def test_isolated_pair_values():
    g = undirected(2, [(0, 1)])
    assert modularity(g, {0: 0, 1: 1}, 1.0) == pytest.approx(-0.5, abs=1e-12)
    assert modularity(g, {0: 0, 1: 0}, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_relabeling_invariance():
    g = triangle_barbell()
    a = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    b = {0: 9, 1: 9, 2: 9, 3: 4, 4: 4, 5: 4}
    assert modularity(g, a, 0.7) == modularity(g, b, 0.7)


def test_move_gain_known_case():
    # pulling node 3 out of its triangle into the other one hurts
    g = triangle_barbell()
    p = Partition.from_assignment(g, {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1})
    assert move_gain(g, p, 3, 0, rho=1.0) == pytest.approx(
        -0.2346938775510204, abs=1e-12
    )


def random_graph(rng, n):
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < 0.25:
                edges.append((u, v, float(rng.uniform(0.1, 2.0))))
    if not edges:
        edges.append((0, 1 % n, 1.0))
    return build_graph(n, edges)


def test_move_gain_matches_full_recompute():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(4, 31))
        g = random_graph(rng, n)
        rho = float(rng.choice([0.05, 0.5, 1.0, 3.0]))
        assign = {u: int(rng.integers(max(1, n // 2))) for u in range(n)}
        p = Partition.from_assignment(g, assign)
        node = int(rng.integers(n))
        target = int(rng.choice(sorted(p.clusters)))
        before = modularity(g, assign, rho)
        gain = move_gain(g, p, node, target, rho)
        assign2 = dict(assign)
        assign2[node] = target
        after = modularity(g, assign2, rho)
        worst = max(worst, abs(gain - (after - before)))
    assert worst < 1e-10


def test_partition_move_keeps_cached_sums_consistent():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 12)
    assign = {u: u % 3 for u in range(12)}
    p = Partition.from_assignment(g, assign)
    for _ in range(30):
        node = int(rng.integers(12))
        target = int(rng.choice(sorted(p.clusters)))
        p.move(node, target)
        assign[node] = target
    fresh = Partition.from_assignment(g, assign)
    assert p.assignment == fresh.assignment
    assert p.clusters == fresh.clusters
    for c in p.clusters:
        assert p.internal_w[c] == pytest.approx(fresh.internal_w[c], abs=1e-12)
        assert p.out_w[c] == pytest.approx(fresh.out_w[c], abs=1e-12)
        assert p.in_w[c] == pytest.approx(fresh.in_w[c], abs=1e-12)


def test_partition_copy_is_independent():
    g = triangle_barbell()
    p = Partition.from_assignment(g, {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1})
    q = p.copy()
    q.move(0, 1)
    assert p.assignment[0] == 0
    assert q.assignment[0] == 1


def test_partition_singletons():
    g = triangle_barbell()
    p = Partition.singletons(g)
    assert p.cluster_count() == 6
    assert sorted(set(p.assignment.values())) == list(range(6))
