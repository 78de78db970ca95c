"""Shared oracles for the test suite.

Everything here is deliberately naive: brute force over all set
partitions, textbook Q-learning loops, breadth-first search.  The point
is independence from the library code under test, not speed.
"""

from __future__ import annotations

from collections import deque

from louvain_skills import build_graph, modularity


def undirected(n, edges):
    """Build a symmetric digraph from undirected unit edges."""
    arcs = []
    for u, v in edges:
        arcs.append((u, v, 1.0))
        arcs.append((v, u, 1.0))
    return build_graph(n, arcs)


# the three curated small graphs: two triangles joined by one edge,
# two 2-cliques joined by one edge, three triangles joined in a ring
def small_suite():
    return {
        "triangle-barbell": undirected(
            6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]
        ),
        "two-cliques-bridge": undirected(4, [(0, 1), (2, 3), (1, 2)]),
        "triangle-ring": undirected(
            9,
            [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5),
             (6, 7), (6, 8), (7, 8), (2, 3), (5, 6), (8, 0)],
        ),
    }


def set_partitions(n):
    """All partitions of range(n) as restricted-growth label tuples."""

    def rec(k, cur, mx):
        if k == n:
            yield tuple(cur)
            return
        for c in range(mx + 1):
            cur.append(c)
            yield from rec(k + 1, cur, mx if c < mx else mx + 1)
            cur.pop()

    yield from rec(0, [], 0)


def brute_force_best(g, rho):
    """Exhaustive modularity maximum; only viable for small n."""
    best_q, best_p = -float("inf"), None
    for p in set_partitions(g.n):
        q = modularity(g, dict(enumerate(p)), rho)
        if q > best_q:
            best_q, best_p = q, p
    return best_q, best_p


def canon(base):
    """Relabel a partition by first appearance so equal partitions
    compare equal regardless of cluster ids."""
    seen: dict[int, int] = {}
    out = []
    for c in base:
        if c not in seen:
            seen[c] = len(seen)
        out.append(seen[c])
    return tuple(out)


def optimal_return(env):
    """0.999 - 0.001*(d-1) where d is the shortest path from the
    current start to the nearest terminal state, found by BFS."""
    s0 = env.reset(None)
    dist = {s0: 0}
    dq = deque([s0])
    while dq:
        s = dq.popleft()
        if env.is_terminal(s):
            return 0.999 - 0.001 * (dist[s] - 1)
        for a in env.actions(s):
            ns, _ = env.step(s, a)
            if ns not in dist:
                dist[ns] = dist[s] + 1
                dq.append(ns)
    raise AssertionError("no terminal state reachable from start")


# the four-rooms layout: door cells sit on the dividing walls, every
# other floor cell belongs to exactly one room quadrant
ROOMS_DOORS = {(3, 6), (10, 6), (6, 2), (7, 10)}


def room_of(cell):
    r, c = cell
    if r < 6 and c < 6:
        return "TL"
    if r < 7 and c > 6:
        return "TR"
    if r > 6 and c < 6:
        return "BL"
    return "BR"


def is_four_rooms_partition(base, states):
    """True if the partition, doors aside, is exactly the four rooms."""
    by_cluster: dict[int, set] = {}
    for i, st in enumerate(states):
        if st in ROOMS_DOORS:
            continue
        by_cluster.setdefault(base[i], set()).add(room_of(st))
    rooms = list(by_cluster.values())
    return (
        len(rooms) == 4
        and all(len(r) == 1 for r in rooms)
        and len(set(frozenset(r) for r in rooms)) == 4
    )
