"""Weighted directed graphs, transition-graph extraction and related utilities."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "WeightedDigraph",
    "StateIndex",
    "build_graph",
    "extract_transition_graph",
    "aggregate_graph",
    "induced_subgraph",
    "knn_graph",
    "weakly_connected_components",
    "graph_to_json",
    "graph_from_json",
]


@dataclass(frozen=True)
class WeightedDigraph:
    """Immutable weighted digraph over dense node ids 0..n-1.

    Parallel edges are merged at construction; weights are strictly positive.
    Self-loops are permitted (cluster aggregates use them to carry
    intra-cluster weight).
    """

    n: int
    out_adj: tuple[tuple[tuple[int, float], ...], ...]
    in_adj: tuple[tuple[tuple[int, float], ...], ...]
    out_strength: tuple[float, ...]
    in_strength: tuple[float, ...]
    self_loop: tuple[float, ...]
    total_weight: float
    node_labels: tuple[str, ...] | None = None

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.out_adj)

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """Yield (src, dst, weight) in lexicographic (src, dst) order."""
        for u in range(self.n):
            for v, w in self.out_adj[u]:
                yield u, v, w

    def weight(self, u: int, v: int) -> float:
        for x, w in self.out_adj[u]:
            if x == v:
                return w
        return 0.0


def build_graph(
    n: int,
    edges: Iterable[tuple[int, int, float]],
    node_labels: Sequence[str] | None = None,
) -> WeightedDigraph:
    """Construct a WeightedDigraph, summing duplicate (src, dst) entries."""
    if n < 0:
        raise ValueError("node count must be non-negative")
    acc: list[dict[int, float]] = [dict() for _ in range(n)]
    for u, v, w in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        if w <= 0.0 or not math.isfinite(w):
            raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
        acc[u][v] = acc[u].get(v, 0.0) + w
    in_acc: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    out_adj = []
    self_loop = [0.0] * n
    out_strength = [0.0] * n
    in_strength = [0.0] * n
    total = 0.0
    for u in range(n):
        row = sorted(acc[u].items())
        out_adj.append(tuple(row))
        for v, w in row:
            out_strength[u] += w
            in_strength[v] += w
            in_acc[v].append((u, w))
            total += w
            if v == u:
                self_loop[u] = w
    labels = tuple(node_labels) if node_labels is not None else None
    if labels is not None and len(labels) != n:
        raise ValueError("node_labels length must equal n")
    return WeightedDigraph(
        n=n,
        out_adj=tuple(out_adj),
        in_adj=tuple(tuple(sorted(row)) for row in in_acc),
        out_strength=tuple(out_strength),
        in_strength=tuple(in_strength),
        self_loop=tuple(self_loop),
        total_weight=total,
        node_labels=labels,
    )


@dataclass
class StateIndex:
    """Bidirectional map between environment states and dense node ids.

    Ids are assigned in first-visit order, so a fixed exploration order
    yields a reproducible indexing.
    """

    _id_of: dict[Hashable, int] = field(default_factory=dict)
    _state_of: list[Hashable] = field(default_factory=list)

    def add(self, state: Hashable) -> int:
        idx = self._id_of.get(state)
        if idx is None:
            idx = len(self._state_of)
            self._id_of[state] = idx
            self._state_of.append(state)
        return idx

    def id_of(self, state: Hashable) -> int:
        return self._id_of[state]

    def state_of(self, idx: int) -> Hashable:
        return self._state_of[idx]

    def __contains__(self, state: Hashable) -> bool:
        return state in self._id_of

    def __len__(self) -> int:
        return len(self._state_of)

    def states(self) -> list[Hashable]:
        return list(self._state_of)


def extract_transition_graph(
    env, node_cap: int = 10_000_000
) -> tuple[WeightedDigraph, StateIndex]:
    """Extraction of the state transition graph of `env`.

    Nodes are the states reachable from `env.start_support()`; a directed
    edge (u, v) of weight 1 exists iff some action moves u to v in one
    step.  Self-transitions (blocked moves, ineffective actions) produce
    no edge.  Node ids follow sorted state order, so the graph is
    independent of which start candidate seeds the reachability sweep.
    """
    seen: set[Hashable] = set(env.start_support())
    queue: deque[Hashable] = deque(seen)
    edges: set[tuple[Hashable, Hashable]] = set()
    while queue:
        s = queue.popleft()
        for a in env.actions(s):
            s2, _ = env.step(s, a)
            if s2 == s:
                continue
            if s2 not in seen:
                if len(seen) >= node_cap:
                    raise RuntimeError(
                        f"transition graph exceeds node cap {node_cap}; "
                        "refusing to enumerate further"
                    )
                seen.add(s2)
                queue.append(s2)
            edges.add((s, s2))
    index = StateIndex()
    for s in sorted(seen):
        index.add(s)
    labels = [str(s) for s in index.states()]
    id_edges = [(index.id_of(u), index.id_of(v), 1.0) for u, v in edges]
    id_edges.sort()
    g = build_graph(len(index), id_edges, labels)
    return g, index


def aggregate_graph(g: WeightedDigraph, assignment) -> tuple[WeightedDigraph, list[int]]:
    """Collapse each cluster of `assignment` to a single node.

    `assignment` maps every node of `g` to a cluster id (a Partition is
    accepted as well).  Edge weights between clusters are summed and
    intra-cluster weight becomes a self-loop, so total weight is
    preserved.  Aggregate node ids are dense, ordered by sorted cluster
    id; the second return value maps aggregate node id -> cluster id.
    """
    assignment = getattr(assignment, "assignment", assignment)
    if len(assignment) != g.n:
        raise ValueError("assignment must cover every node exactly once")
    cluster_ids = sorted(set(assignment.values()))
    dense = {c: i for i, c in enumerate(cluster_ids)}
    edges: dict[tuple[int, int], float] = {}
    for u in range(g.n):
        cu = dense[assignment[u]]
        for v, w in g.out_adj[u]:
            key = (cu, dense[assignment[v]])
            edges[key] = edges.get(key, 0.0) + w
    agg = build_graph(
        len(cluster_ids), [(u, v, w) for (u, v), w in sorted(edges.items())]
    )
    return agg, cluster_ids


def induced_subgraph(
    g: WeightedDigraph, nodes: Sequence[int]
) -> tuple[WeightedDigraph, list[int]]:
    """Subgraph induced by `nodes`, relabelled to dense local ids.

    Returns the subgraph and the local -> global node id map (in the
    order given, which must be duplicate-free).
    """
    local = {u: i for i, u in enumerate(nodes)}
    if len(local) != len(nodes):
        raise ValueError("duplicate node in subgraph request")
    edges = []
    for u in nodes:
        lu = local[u]
        for v, w in g.out_adj[u]:
            lv = local.get(v)
            if lv is not None:
                edges.append((lu, lv, w))
    labels = None
    if g.node_labels is not None:
        labels = [g.node_labels[u] for u in nodes]
    return build_graph(len(nodes), edges, labels), list(nodes)


def knn_graph(points: np.ndarray, k: int, scale: float) -> WeightedDigraph:
    """Symmetric k-nearest-neighbour graph over rows of `points`.

    Each point is linked to its k nearest neighbours in both directions
    with weight exp(-scale * d^2); mutual neighbours share one edge per
    direction (weights are not doubled).
    """
    from scipy.spatial import cKDTree

    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if not 0 < k < n:
        raise ValueError(f"k must satisfy 0 < k < n, got k={k}, n={n}")
    tree = cKDTree(pts)
    dists, nbrs = tree.query(pts, k=k + 1)
    edges: dict[tuple[int, int], float] = {}
    for u in range(n):
        for d, v in zip(dists[u], nbrs[u]):
            if v == u:
                continue
            w = math.exp(-scale * d * d)
            edges[(u, int(v))] = w
            edges[(int(v), u)] = w
    return build_graph(n, [(u, v, w) for (u, v), w in sorted(edges.items())])


def weakly_connected_components(g: WeightedDigraph) -> list[list[int]]:
    """Connected components of the undirected view, each sorted by node id,
    listed in order of smallest member."""
    seen = [False] * g.n
    comps = []
    for root in range(g.n):
        if seen[root]:
            continue
        seen[root] = True
        comp = [root]
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, _ in g.out_adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
            for v, _ in g.in_adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comp.sort()
        comps.append(comp)
    return comps


def graph_to_json(g: WeightedDigraph) -> str:
    """Serialize to the interchange format: node list with optional labels
    plus (src, dst, weight) triples.  Weights round-trip exactly."""
    nodes = []
    for u in range(g.n):
        node: dict = {"id": u}
        if g.node_labels is not None:
            node["label"] = g.node_labels[u]
        nodes.append(node)
    doc = {"nodes": nodes, "edges": [[u, v, w] for u, v, w in g.edges()]}
    return json.dumps(doc, separators=(",", ":"))


def graph_from_json(text: str) -> WeightedDigraph:
    doc = json.loads(text)
    nodes = doc["nodes"]
    ids = [node["id"] for node in nodes]
    if ids != list(range(len(nodes))):
        raise ValueError("graph JSON must list dense node ids in order")
    labels = None
    if any("label" in node for node in nodes):
        labels = [node.get("label", "") for node in nodes]
    return build_graph(len(nodes), [tuple(e) for e in doc["edges"]], labels)
