"""Louvain clustering with a resolution knob, plus an incremental update mode.

`run_louvain` produces the full hierarchy of partitions discovered by the
usual two-step loop: greedy single-node moves until no move improves the
quality, then collapse clusters to nodes and repeat.  Every accepted pass
is kept as one level, finest first.

Each weakly connected component is clustered against its own total edge
weight.  On connected graphs this is the plain algorithm; on disconnected
ones it stops each component at its natural top instead of letting the
global normalisation glue unrelated components' clusters together.
Components that stop early carry their final partition through the
remaining levels unchanged.

`update_partitions` revises an existing hierarchy after the graph has
grown: previously assigned nodes are frozen, only new nodes are swept,
and existing levels are retained even when their quality did not improve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import (
    WeightedDigraph,
    aggregate_graph,
    build_graph,
    induced_subgraph,
    weakly_connected_components,
)
from .modularity import Partition, _gain, modularity

__all__ = [
    "Level",
    "ClusterHierarchy",
    "local_moves",
    "run_louvain",
    "update_partitions",
    "prune",
    "partition_score",
    "hierarchy_to_json",
    "hierarchy_from_json",
]

GAIN_THRESHOLD = 1e-12


@dataclass
class Level:
    """One hierarchy level.

    `assignment` partitions the nodes of this level's input graph (the
    original graph for level 0, the previous aggregate otherwise) into
    clusters with persistent integer ids.  `cluster_ids` lists those ids
    sorted; a cluster's position in it is its dense index, which is also
    its node id in `aggregate`.  `base` maps every original node to the
    dense index of its cluster at this level.
    """

    raw_index: int
    assignment: dict[int, int]
    cluster_ids: list[int]
    aggregate: WeightedDigraph
    base: list[int]

    @property
    def cluster_count(self) -> int:
        return len(self.cluster_ids)

    def base_clusters(self) -> list[list[int]]:
        """Original-node members of each cluster, in dense-index order."""
        groups: list[list[int]] = [[] for _ in self.cluster_ids]
        for node, idx in enumerate(self.base):
            groups[idx].append(node)
        return groups


@dataclass
class ClusterHierarchy:
    n_nodes: int
    rho: float
    levels: list[Level]
    graph: WeightedDigraph | None = None

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def base_partitions(self) -> list[list[int]]:
        return [lvl.base for lvl in self.levels]

    def cluster_counts(self) -> list[int]:
        return [lvl.cluster_count for lvl in self.levels]


def local_moves(
    g: WeightedDigraph,
    p: Partition,
    rho: float,
    order: Sequence[int],
    gain_threshold: float = GAIN_THRESHOLD,
) -> bool:
    """Greedy single-node moves, sweeping `order` until a full pass is quiet.

    Each node moves to the adjacent cluster (by in- or out-edge) with the
    largest gain, provided that gain exceeds `gain_threshold`; ties pick
    the lowest cluster id.  Only nodes listed in `order` are swept, which
    is what the incremental update relies on.  Returns True if any move
    was made.
    """
    m = g.total_weight
    if m <= 0.0:
        return False
    assignment = p.assignment
    out_w = p.out_w
    in_w = p.in_w
    out_strength = g.out_strength
    in_strength = g.in_strength
    moved_any = False
    while True:
        moved = False
        for u in order:
            ks = p.neighbour_weights(u)
            if not ks:
                continue
            cur = assignment[u]
            k_cur = ks.get(cur, (0.0, 0.0))
            duo = out_strength[u]
            dui = in_strength[u]
            o_cur = out_w[cur]
            i_cur = in_w[cur]
            best_gain = gain_threshold
            best_c = -1
            for c in sorted(ks):
                if c == cur:
                    continue
                gain = _gain(
                    m, rho, k_cur, ks[c], duo, dui, o_cur, i_cur, out_w[c], in_w[c]
                )
                if gain > best_gain:
                    best_gain = gain
                    best_c = c
            if best_c >= 0:
                p.move(u, best_c)
                moved = True
                moved_any = True
        if not moved:
            break
    return moved_any


def _phase_loop(gc: WeightedDigraph, rho: float, rng: np.random.Generator):
    """Louvain passes over one connected graph.

    Returns per-level (assignment, sorted cluster ids) pairs; the chain
    of aggregates is rebuilt by the caller.  A pass is kept only if it
    strictly improved modularity, i.e. made at least one positive move.
    """
    levels = []
    cur = gc
    while cur.total_weight > 0.0:
        p = Partition.singletons(cur)
        q_old = modularity(cur, p, rho)
        order = [int(u) for u in rng.permutation(cur.n)]
        local_moves(cur, p, rho, order)
        q_new = modularity(cur, p, rho)
        if not q_new > q_old:
            break
        agg, cluster_ids = aggregate_graph(cur, p.assignment)
        levels.append((dict(p.assignment), cluster_ids))
        cur = agg
    return levels


def _final_base_modularity(sub: WeightedDigraph, levels, rho: float) -> float:
    """Modularity of the coarsest partition a phase chain induces on `sub`."""
    base = list(range(sub.n))
    for assignment, cluster_ids in levels:
        dense = {c: k for k, c in enumerate(cluster_ids)}
        base = [dense[assignment[x]] for x in base]
    return modularity(sub, {u: c for u, c in enumerate(base)}, rho)


def run_louvain(
    g: WeightedDigraph, rho: float, seed: int = 0, restarts: int = 16
) -> ClusterHierarchy:
    """Full hierarchy for `g` at resolution `rho`.

    Each weakly connected component is clustered on its own, with
    `restarts` independently seeded sweep orders; the chain whose
    coarsest partition scores highest is kept (first wins ties).  The
    restarts matter on graphs with one-way bottlenecks, where a single
    greedy pass sometimes consolidates across them early and lands in a
    clearly worse local maximum.  Deterministic for fixed (seed, rho).
    Returns an empty hierarchy when no positive move exists at all
    (single nodes, edgeless graphs).
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    comps = weakly_connected_components(g)
    runs = []
    for ci, comp in enumerate(comps):
        sub, _ = induced_subgraph(g, comp)
        best = None
        best_q = -math.inf
        for r in range(restarts):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ci, r)))
            levels = _phase_loop(sub, rho, rng)
            q = _final_base_modularity(sub, levels, rho) if sub.total_weight > 0 else 0.0
            if q > best_q + 1e-13:
                best, best_q = levels, q
        runs.append(best)
    depth = max((len(r) for r in runs), default=0)
    levels: list[Level] = []
    cur_g = g
    carrier = list(range(g.n))
    # proj[k] maps component k's local node ids at the current level to
    # global node ids of the combined graph at that level.
    proj = [list(comp) for comp in comps]
    for i in range(depth):
        combined: dict[int, int] = {}
        next_cid = 0
        new_proj = []
        for k, run in enumerate(runs):
            if i < len(run):
                local_assignment, local_ids = run[i]
                dense_local = {c: j for j, c in enumerate(local_ids)}
                offset = next_cid
                for j, u in enumerate(proj[k]):
                    combined[u] = offset + dense_local[local_assignment[j]]
                count = len(local_ids)
            else:
                # exhausted component: its clusters pass through unchanged
                offset = next_cid
                for j, u in enumerate(proj[k]):
                    combined[u] = offset + j
                count = len(proj[k])
            next_cid += count
            new_proj.append(list(range(offset, offset + count)))
        agg, cluster_ids = aggregate_graph(cur_g, combined)
        base = [combined[carrier[x]] for x in range(g.n)]
        levels.append(
            Level(
                raw_index=i,
                assignment=combined,
                cluster_ids=cluster_ids,
                aggregate=agg,
                base=base,
            )
        )
        carrier = base
        cur_g = agg
        proj = new_proj
    return ClusterHierarchy(n_nodes=g.n, rho=rho, levels=levels, graph=g)


def update_partitions(
    g: WeightedDigraph, existing: ClusterHierarchy, rho: float
) -> ClusterHierarchy:
    """Revise `existing` (built for a subgraph of `g`) against the grown graph.

    At each level, nodes already assigned keep their cluster; unassigned
    nodes start as singletons and are swept (in node-id order) between
    neighbouring clusters.  A level within the existing hierarchy is
    always retained; beyond it, levels are added only while quality keeps
    improving, exactly as in a fresh run.  Cluster ids are stable: a
    surviving cluster keeps its id and its dense index across revisions.
    """
    levels_out: list[Level] = []
    cur_g = g
    carrier = list(range(g.n))
    i = 0
    while True:
        if i < existing.level_count:
            prev = existing.levels[i]
            assignment = dict(prev.assignment)
            next_cid = max(prev.cluster_ids) + 1 if prev.cluster_ids else 0
            if assignment and max(assignment) >= cur_g.n:
                raise ValueError("existing hierarchy is not over a subgraph of g")
        else:
            assignment = {}
            next_cid = 0
        new_nodes = [u for u in range(cur_g.n) if u not in assignment]
        for u in new_nodes:
            assignment[u] = next_cid
            next_cid += 1
        q_old = 0.0
        q_new = 0.0
        out_assignment: dict[int, int] = {}
        new_set = set(new_nodes)
        for comp in weakly_connected_components(cur_g):
            sub, nodes = induced_subgraph(cur_g, comp)
            g2l = {u: j for j, u in enumerate(nodes)}
            if sub.total_weight <= 0.0:
                for u in comp:
                    out_assignment[u] = assignment[u]
                continue
            p = Partition.from_assignment(sub, {g2l[u]: assignment[u] for u in comp})
            q_old += modularity(sub, p, rho)
            order = [g2l[u] for u in comp if u in new_set]
            local_moves(sub, p, rho, order)
            q_new += modularity(sub, p, rho)
            for u in comp:
                out_assignment[u] = p.assignment[g2l[u]]
        if not (q_new > q_old or i < existing.level_count):
            break
        agg, cluster_ids = aggregate_graph(cur_g, out_assignment)
        dense = {c: j for j, c in enumerate(cluster_ids)}
        base = [dense[out_assignment[carrier[x]]] for x in range(g.n)]
        levels_out.append(
            Level(
                raw_index=i,
                assignment=out_assignment,
                cluster_ids=cluster_ids,
                aggregate=agg,
                base=base,
            )
        )
        carrier = base
        cur_g = agg
        i += 1
    return ClusterHierarchy(n_nodes=g.n, rho=rho, levels=levels_out, graph=g)


def prune(h: ClusterHierarchy, min_mean_cluster_size: float = 4.0) -> ClusterHierarchy:
    """Drop the finest levels whose mean cluster size is below the threshold.

    Mean cluster size never decreases with level, so the kept levels form
    a suffix; that property is asserted rather than assumed.
    """
    counts = h.cluster_counts()
    for a, b in zip(counts, counts[1:]):
        assert b <= a, "cluster counts must be non-increasing with level"
    kept = [
        lvl
        for lvl in h.levels
        if h.n_nodes / lvl.cluster_count >= min_mean_cluster_size
    ]
    if kept:
        first = h.levels.index(kept[0])
        assert kept == h.levels[first:], "pruning must remove a prefix of levels"
    return ClusterHierarchy(n_nodes=h.n_nodes, rho=h.rho, levels=kept, graph=h.graph)


def partition_score(g: WeightedDigraph, p, rho: float) -> float:
    """Sum of per-component modularities of an assignment over `g`.

    This is the quantity the clustering monotonically improves; on a
    connected graph it equals `modularity` exactly.
    """
    assignment = getattr(p, "assignment", p)
    total = 0.0
    for comp in weakly_connected_components(g):
        sub, nodes = induced_subgraph(g, comp)
        if sub.total_weight <= 0.0:
            continue
        g2l = {u: j for j, u in enumerate(nodes)}
        total += modularity(sub, {g2l[u]: assignment[u] for u in comp}, rho)
    return total


def hierarchy_to_json(h: ClusterHierarchy) -> str:
    doc = {
        "rho": h.rho,
        "n_nodes": h.n_nodes,
        "levels": [
            {
                "raw_index": lvl.raw_index,
                "clusters": lvl.base_clusters(),
                "aggregate_edges": [[u, v, w] for u, v, w in lvl.aggregate.edges()],
            }
            for lvl in h.levels
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def hierarchy_from_json(text: str) -> ClusterHierarchy:
    doc = json.loads(text)
    n = doc["n_nodes"]
    levels: list[Level] = []
    prev_base: list[int] | None = None
    for entry in doc["levels"]:
        clusters = entry["clusters"]
        count = len(clusters)
        base = [0] * n
        for j, members in enumerate(clusters):
            for node in members:
                base[node] = j
        if prev_base is None:
            assignment = {node: base[node] for node in range(n)}
        else:
            assignment = {prev_base[node]: base[node] for node in range(n)}
        agg = build_graph(count, [tuple(e) for e in entry["aggregate_edges"]])
        levels.append(
            Level(
                raw_index=entry["raw_index"],
                assignment=assignment,
                cluster_ids=list(range(count)),
                aggregate=agg,
                base=base,
            )
        )
        prev_base = base
    return ClusterHierarchy(n_nodes=n, rho=doc["rho"], levels=levels, graph=None)
