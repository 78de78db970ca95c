"""Skills distilled from a cluster hierarchy.

Every directed edge between clusters at one retained level becomes a
skill: start anywhere in the edge's source cluster, behave so as to
enter its target cluster.  Skills at the lowest retained level choose
among primitive actions; above that they choose among the skills one
level down rooted inside the parent's two clusters, so a high-level
choice unwinds into a chain of progressively more local behaviours.

Policies are trained offline on the cached dynamics alone, with no task
reward: episodes start at a random source state, every action costs a
little, entering the target pays one.  Any step that would leave the
skill's two clusters (or cross an edge the caller has not observed yet,
in incremental mode) is a no-op that still costs, so policies learn to
route around dead ends instead of exploiting them.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .learning import TabularModel
from .louvain import ClusterHierarchy

__all__ = [
    "Option",
    "OptionHierarchy",
    "OfflineParams",
    "build_option_hierarchy",
    "train_option_policies",
    "flatten_hierarchy",
    "select_level",
    "options_to_json",
    "options_from_json",
]


@dataclass
class Option:
    """One skill: reach `target` from anywhere in `source`.

    `children` are the action ids its policy chooses among: primitive
    ids below n_primitives, otherwise uids resolved via `child_lookup`.
    `cluster_key` is (raw hierarchy level, source cluster id, target
    cluster id); cluster ids are stable across incremental revisions,
    so the key identifies "the same skill" after the graph has grown.
    `q` maps state -> values over `children` (positionally); `policy`
    is the greedy child per state, kept alongside q because it is what
    serialization preserves.
    """

    uid: int
    level: int
    raw_level: int
    src: int
    tgt: int
    cluster_key: tuple[int, int, int]
    source: frozenset
    target: frozenset
    children: tuple[int, ...]
    child_lookup: dict[int, "Option"] = field(default_factory=dict)
    q: dict[int, np.ndarray] | None = None
    policy: dict[int, int] | None = None
    success: bool = False

    @property
    def region(self) -> frozenset:
        return self.source | self.target


@dataclass
class OptionHierarchy:
    """Per-level skill lists, finest level first (level 1)."""

    n_primitives: int
    levels: list[list[Option]]

    @property
    def level_count(self) -> int:
        return len(self.levels)

    @property
    def options(self) -> list[Option]:
        """Flat inventory in uid order."""
        return [o for lvl in self.levels for o in lvl]

    def by_pair(self) -> dict[tuple[int, int, int], Option]:
        """(level, src, tgt) -> option."""
        return {(o.level, o.src, o.tgt): o for o in self.options}

    def by_key(self) -> dict[tuple[int, int, int], Option]:
        """cluster_key -> option, the identity used across revisions."""
        return {o.cluster_key: o for o in self.options}


def build_option_hierarchy(
    h: ClusterHierarchy, model: TabularModel, node_map=None
) -> OptionHierarchy:
    """One untrained skill per directed aggregate edge per retained level.

    `h` must be pruned already; an empty hierarchy yields an empty skill
    set and the caller falls back to primitives.  `node_map` translates
    hierarchy node ids to model state ids when they differ (incremental
    mode clusters a graph over only the states seen so far); by default
    they are the same ids.

    A level-L skill's children are the level-(L-1) skills rooted in
    either of its two clusters.  Nesting makes that the same thing as
    "source overlaps the parent's region", and guarantees every skill
    has at least one child, which is asserted.
    """
    if node_map is None:
        node_map = range(h.n_nodes)
    n_prim = model.n_primitives
    levels: list[list[Option]] = []
    uid = n_prim
    prev_level: list[Option] = []
    prev_base: list[int] | None = None
    for li, lvl in enumerate(h.levels):
        members = [
            frozenset(node_map[x] for x in grp) for grp in lvl.base_clusters()
        ]
        if prev_base is not None:
            parent = {}
            for x, f in enumerate(prev_base):
                parent[f] = lvl.base[x]
        options: list[Option] = []
        for i, j in sorted(
            (u, v) for u, v, _ in lvl.aggregate.edges() if u != v
        ):
            if prev_base is None:
                children = tuple(range(n_prim))
                lookup: dict[int, Option] = {}
            else:
                kids = [o for o in prev_level if parent[o.src] in (i, j)]
                children = tuple(o.uid for o in kids)
                lookup = {o.uid: o for o in kids}
                assert children, "a skill must have at least one child"
            options.append(
                Option(
                    uid=uid,
                    level=li + 1,
                    raw_level=lvl.raw_index,
                    src=i,
                    tgt=j,
                    cluster_key=(
                        lvl.raw_index,
                        int(lvl.cluster_ids[i]),
                        int(lvl.cluster_ids[j]),
                    ),
                    source=members[i],
                    target=members[j],
                    children=children,
                    child_lookup=lookup,
                )
            )
            uid += 1
        levels.append(options)
        prev_level = options
        prev_base = lvl.base
    return OptionHierarchy(n_primitives=n_prim, levels=levels)


@dataclass(frozen=True)
class OfflineParams:
    alpha: float = 0.6
    gamma: float = 1.0
    q0: float = 0.0
    epsilon: float = 0.2
    episodes: int = 500
    cap_factor: int = 10     # episode step cap = cap_factor * |region|
    check_every: int = 10    # episodes between greedy-coverage checks
    verify_factor: int = 4   # coverage rollout cap = verify_factor * |region|


def _admissible_children(o: Option, u: int, model: TabularModel):
    ids = []
    for ch in o.children:
        if ch < model.n_primitives:
            if ch in model.actions[u]:
                ids.append(ch)
        elif u in o.child_lookup[ch].source:
            ids.append(ch)
    if not ids:
        # a cluster with no outgoing cross edge in a partially known graph
        # leaves states no child covers; primitives stand in there
        return list(model.actions[u])
    return ids


def _greedy_child(o: Option, u: int, model: TabularModel) -> int:
    """Greedy child of `o` at `u`; ties break toward the lowest id."""
    ids = _admissible_children(o, u, model)
    pos = {ch: k for k, ch in enumerate(o.children)}
    if ids[0] not in pos:
        return ids[0]  # primitive fallback: no values to compare
    if o.q is not None and u in o.q:
        row = o.q[u]
        best = ids[0]
        bv = row[pos[best]]
        for ch in ids[1:]:
            v = row[pos[ch]]
            if v > bv:
                bv = v
                best = ch
        return best
    if o.policy:
        pick = o.policy.get(u)
        if pick is not None and pick in ids:
            return pick
    return ids[0]


def _run_child(o: Option, ch: int, u: int, budget: int, step, model, target,
               gamma: float):
    """Execute child `ch` of `o` greedily until it terminates, the parent
    target is entered, a terminal state is hit, or the step budget runs
    out.  Returns (state, steps used, discounted reward, hit, dead)."""
    if ch < model.n_primitives:
        v = step(u, ch)
        hit = v in target
        return v, 1, -0.01 + (1.0 if hit else 0.0), hit, model.terminal[v]
    sub = o.child_lookup[ch]
    used = 0
    total = 0.0
    scale = 1.0
    while used < budget:
        g = _greedy_child(sub, u, model)
        v, du, r, hit, dead = _run_child(sub, g, u, budget - used, step, model,
                                         target, gamma)
        used += du
        total += scale * r
        scale *= gamma ** du
        u = v
        if hit or dead:
            return u, used, total, hit, dead
        if u in sub.target or u not in sub.source:
            break
    return u, used, total, False, False


def _make_step(model: TabularModel, region, known_edges):
    """Dynamics confined to `region`: a move that would leave it, or use
    an edge outside `known_edges` (when given), leaves the state put."""
    nxt = model.next_state

    def step(u: int, a: int) -> int:
        v = nxt[u][a]
        if v == u:
            return u
        if v not in region:
            return u
        if known_edges is not None and (u, v) not in known_edges:
            return u
        return v

    return step


def _greedy_covers(o: Option, model, step, starts, cap) -> bool:
    """True when the fully greedy chain enters the target from every
    non-terminal source state within `cap` primitive steps."""
    for u0 in starts:
        u = u0
        used = 0
        ok = False
        while used < cap:
            ch = _greedy_child(o, u, model)
            v, du, _, hit, dead = _run_child(o, ch, u, cap - used, step, model,
                                             o.target, 1.0)
            used += du
            u = v
            if hit:
                ok = True
                break
            if dead or du == 0:
                break
        if not ok:
            return False
    return True


def _train_option(o: Option, model: TabularModel, params: OfflineParams,
                  rng: np.random.Generator, known_edges) -> None:
    region = set(o.source) | set(o.target)
    step = _make_step(model, region, known_edges)
    starts = sorted(u for u in o.source if not model.terminal[u])
    n_children = len(o.children)
    pos = {ch: k for k, ch in enumerate(o.children)}
    q = o.q if o.q is not None else {}
    o.q = q
    if not starts:
        o.policy = {}
        o.success = True
        return
    cap = params.cap_factor * len(region)
    vcap = params.verify_factor * len(region)
    adm_cache: dict[int, list[int]] = {}

    def adm(u):
        ids = adm_cache.get(u)
        if ids is None:
            ids = adm_cache[u] = _admissible_children(o, u, model)
        return ids

    def maxq(u):
        row = q.get(u)
        if row is None:
            return params.q0
        vals = [row[pos[ch]] for ch in adm(u) if ch in pos]
        return max(vals) if vals else params.q0

    o.success = False
    for ep in range(params.episodes):
        if ep % params.check_every == 0 and _greedy_covers(
            o, model, step, starts, vcap
        ):
            o.success = True
            break
        u = starts[int(rng.integers(len(starts)))]
        used = 0
        while used < cap:
            ids = adm(u)
            row = q.get(u)
            if row is None:
                row = q[u] = np.full(n_children, params.q0)
            if rng.random() < params.epsilon:
                ch = ids[int(rng.integers(len(ids)))]
            else:
                ch = _greedy_child(o, u, model)
            v, tau, r, hit, dead = _run_child(o, ch, u, cap - used, step,
                                              model, o.target, params.gamma)
            used += tau
            if tau == 0:
                break
            boot = 0.0
            if not hit and not (dead or model.terminal[v]):
                boot = (params.gamma ** tau) * maxq(v)
            k = pos.get(ch)
            if k is not None:  # fallback primitives carry no value slot
                row[k] += params.alpha * (r + boot - row[k])
            u = v
            if hit or dead or model.terminal[v]:
                break
    else:
        o.success = _greedy_covers(o, model, step, starts, vcap)
    o.policy = {u: _greedy_child(o, u, model) for u in starts}
    if not o.success:
        warnings.warn(
            f"skill {o.cluster_key}: greedy policy misses its target from "
            "some start states after the training budget",
            RuntimeWarning,
        )


def _option_rng(seed: int, o: Option) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=o.cluster_key)
    )


def train_option_policies(
    oh: OptionHierarchy,
    model: TabularModel,
    params: OfflineParams = OfflineParams(),
    seed: int = 0,
    known_edges=None,
) -> OptionHierarchy:
    """Train every skill's policy bottom-up and return the hierarchy.

    Each skill trains against its own rng stream keyed by cluster_key,
    so results do not depend on training order and skills within one
    level could train in parallel.  A skill that already has q-values
    fine-tunes them instead of starting over; if its greedy policy
    already covers the source, the early-out check passes immediately.
    A skill whose greedy policy still misses the target after the full
    budget keeps its partial policy, flagged success=False with a
    warning.
    """
    for level in oh.levels:
        for o in level:
            _train_option(o, model, params, _option_rng(seed, o), known_edges)
    return oh


def _primitive_copy(o: Option, n_prim: int, carry: bool) -> Option:
    return Option(
        uid=o.uid,
        level=o.level,
        raw_level=o.raw_level,
        src=o.src,
        tgt=o.tgt,
        cluster_key=o.cluster_key,
        source=o.source,
        target=o.target,
        children=tuple(range(n_prim)),
        child_lookup={},
        q=dict(o.q) if carry and o.q is not None else None,
        policy=dict(o.policy) if carry and o.policy is not None else None,
        success=o.success if carry else False,
    )


def flatten_hierarchy(
    oh: OptionHierarchy,
    model: TabularModel,
    params: OfflineParams = OfflineParams(),
    seed: int = 0,
    known_edges=None,
) -> list[Option]:
    """Same skill inventory, but every policy calls primitives directly.

    Level-1 skills already do, so they are copied with their trained
    policies intact; higher levels are retrained from scratch under the
    same offline protocol.  Returned in the original uid order.
    """
    flat: list[Option] = []
    for o in oh.options:
        copy = _primitive_copy(o, model.n_primitives, carry=o.level == 1)
        if o.level > 1:
            _train_option(copy, model, params, _option_rng(seed, copy),
                          known_edges)
        flat.append(copy)
    return flat


def select_level(
    oh: OptionHierarchy,
    level: int,
    model: TabularModel,
    params: OfflineParams = OfflineParams(),
    seed: int = 0,
    known_edges=None,
) -> list[Option]:
    """One level's skills as a standalone primitive-calling inventory.

    Level 1 is returned as trained; other levels are retrained with
    primitive children.  Skills get fresh consecutive uids.
    """
    if not 1 <= level <= oh.level_count:
        raise ValueError(f"level must be in 1..{oh.level_count}, got {level}")
    out: list[Option] = []
    for k, o in enumerate(oh.levels[level - 1]):
        copy = _primitive_copy(o, model.n_primitives, carry=level == 1)
        copy.uid = model.n_primitives + k
        if level > 1:
            _train_option(copy, model, params, _option_rng(seed, copy),
                          known_edges)
        out.append(copy)
    return out


def options_to_json(oh: OptionHierarchy) -> str:
    """Serialize the inventory with greedy policies only.

    Q-values are dropped: a reloaded skill acts through its policy map,
    so argmax ties that q-values would expose collapse to the single
    stored choice.
    """
    doc = {
        "n_primitives": oh.n_primitives,
        "options": [
            {
                "uid": o.uid,
                "level": o.level,
                "raw_level": o.raw_level,
                "src": o.src,
                "tgt": o.tgt,
                "cluster_key": list(o.cluster_key),
                "source": sorted(o.source),
                "target": sorted(o.target),
                "children": list(o.children),
                "policy": {str(u): ch for u, ch in sorted((o.policy or {}).items())},
                "success": o.success,
            }
            for o in oh.options
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def options_from_json(text: str) -> OptionHierarchy:
    doc = json.loads(text)
    by_uid: dict[int, Option] = {}
    options = []
    for entry in doc["options"]:
        o = Option(
            uid=entry["uid"],
            level=entry["level"],
            raw_level=entry["raw_level"],
            src=entry["src"],
            tgt=entry["tgt"],
            cluster_key=tuple(entry["cluster_key"]),
            source=frozenset(entry["source"]),
            target=frozenset(entry["target"]),
            children=tuple(entry["children"]),
            child_lookup={},
            q=None,
            policy={int(u): ch for u, ch in entry["policy"].items()},
            success=bool(entry["success"]),
        )
        by_uid[o.uid] = o
        options.append(o)
    n_prim = doc["n_primitives"]
    for o in options:
        o.child_lookup = {ch: by_uid[ch] for ch in o.children if ch >= n_prim}
    depth = max((o.level for o in options), default=0)
    levels = [[o for o in options if o.level == lv] for lv in range(1, depth + 1)]
    return OptionHierarchy(n_primitives=n_prim, levels=levels)
