"""Online skill discovery: cluster the transition graph as it is uncovered.

The agent starts with primitive actions and an empty graph, records every
novel state and transition it experiences, and at scheduled decision
stages rebuilds its skill set from the portion of the world seen so far.
Two revision strategies exist: "replace" reclusters the known graph from
scratch, while "update" folds new nodes into the existing clusters
without moving old ones.  Under update a cluster keeps its id for life,
so a skill present both before and after a revision is the same skill
and keeps its learned values.  Replace re-derives every cluster with no
notion of identity, so all skill values restart from scratch; only the
primitive columns persist.  (Matching replace skills to predecessors by
their state sets was tried and rejected: partial matches leave stale
high values next to fresh zero ones, and greedy runs cycle between them
for hundreds of stages before the table heals.)

Known-graph node ids follow discovery order, not the sorted order the
batch pipeline uses: update-style revisions require that a node's id
never changes once assigned, and discovery order is the only ordering
that is stable while the state set is still growing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedDigraph, build_graph
from .learning import TabularModel, Trainer, TrainParams, eval_rng
from .louvain import ClusterHierarchy, prune, run_louvain, update_partitions
from .skills import (
    OfflineParams,
    Option,
    OptionHierarchy,
    build_option_hierarchy,
    train_option_policies,
)

__all__ = ["Schedule", "Revision", "incremental_run", "VARIANTS"]

VARIANTS = ("replace", "update")


@dataclass(frozen=True)
class Schedule:
    """Decision-stage indices after which the hierarchy is revised."""

    stages: tuple[int, ...]

    def __post_init__(self):
        if not self.stages:
            raise ValueError("schedule must contain at least one stage")
        if any(s <= 0 for s in self.stages):
            raise ValueError("schedule stages must be positive")
        if any(b <= a for a, b in zip(self.stages, self.stages[1:])):
            raise ValueError("schedule stages must be strictly increasing")

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """Parse a comma-separated stage list such as "100,500,1000"."""
        try:
            stages = tuple(int(tok) for tok in text.split(",") if tok.strip())
        except ValueError as exc:
            raise ValueError(f"bad schedule {text!r}") from exc
        return cls(stages)


@dataclass
class Revision:
    """What one revision saw and produced; handed to `on_revision`."""

    index: int
    stage: int
    known_states: int
    known_edges: int
    raw_levels: list[int]      # cluster count per raw hierarchy level
    kept_levels: list[int]     # same, after pruning
    skills: int
    carried: int               # skills that survived from the previous set
    hierarchy: ClusterHierarchy  # raw (unpruned), over known-graph ids
    options: OptionHierarchy


def _known_graph(n: int, edges: set[tuple[int, int]],
                 kid: dict[int, int]) -> WeightedDigraph:
    pairs = sorted((kid[u], kid[v]) for u, v in edges)
    return build_graph(n, ((a, b, 1.0) for a, b in pairs))


def _key(o: Option):
    # update never moves an assigned node, so cluster ids are stable and
    # name the same (possibly grown) cluster across revisions
    return o.cluster_key


def _child_token(o: Option, ch: int, n_prim: int):
    if ch < n_prim:
        return ch
    return _key(o.child_lookup[ch])


def _carry_option(new: Option, old: Option, n_prim: int, q0: float) -> None:
    """Move `old`'s learned policy onto `new`, matching children by
    identity rather than by uid (uids are repacked every revision)."""
    slot = {
        _child_token(new, ch, n_prim): k
        for k, ch in enumerate(new.children)
    }
    old_tok = [_child_token(old, ch, n_prim) for ch in old.children]
    if old.q is not None:
        rows: dict[int, np.ndarray] = {}
        for u, row in old.q.items():
            out = np.full(len(new.children), q0)
            for j, tok in enumerate(old_tok):
                k = slot.get(tok)
                if k is not None:
                    out[k] = row[j]
            rows[u] = out
        new.q = rows
    if old.policy is not None:
        tok_of = dict(zip(old.children, old_tok))
        pol = {}
        for u, ch in old.policy.items():
            if ch not in tok_of:
                continue  # fallback primitive at an uncovered state
            k = slot.get(tok_of[ch])
            if k is not None:
                pol[u] = new.children[k]
        new.policy = pol


def incremental_run(
    env,
    variant: str,
    schedule: Schedule,
    params: TrainParams = TrainParams(),
    seed: int = 0,
    *,
    rho: float = 0.05,
    epochs: int = 40,
    epoch_len: int = 100,
    offline: OfflineParams = OfflineParams(),
    eval_max_steps: int = 10_000,
    model: TabularModel | None = None,
    on_revision=None,
):
    """Learn while discovering skills online; returns (curve, hierarchy).

    The curve holds one greedy-evaluation return per epoch, as in
    run_training.  The hierarchy is the raw (unpruned) one from the last
    revision that fired, over known-graph node ids; scheduled stages past
    epochs*epoch_len never fire.  `on_revision`, when given, receives a
    Revision record each time the skill set is rebuilt.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if not isinstance(schedule, Schedule):
        schedule = Schedule(tuple(schedule))
    model = model if model is not None else TabularModel(env)
    tr = Trainer(env, [], params=params, seed=seed, model=model)

    kid: dict[int, int] = {}        # model state id -> known node id
    by_kid: list[int] = []          # inverse, in discovery order
    edges: set[tuple[int, int]] = set()

    def see(u: int) -> None:
        if u not in kid:
            kid[u] = len(by_kid)
            by_kid.append(u)

    see(tr.state)
    h_raw = ClusterHierarchy(n_nodes=0, rho=rho, levels=[], graph=None)
    oh_prev: OptionHierarchy | None = None
    due = set(schedule.stages)
    curve: list[float] = []
    total = epochs * epoch_len
    rev_index = 0
    for stage in range(1, total + 1):
        u, a, r, v = tr.run_stage()
        see(v)
        if v != u:
            edges.add((u, v))
        see(tr.state)  # episode resets land on a (possibly novel) start
        if stage in due:
            gk = _known_graph(len(by_kid), edges, kid)
            if variant == "replace":
                h_raw = run_louvain(gk, rho, seed=seed)
            else:
                h_raw = update_partitions(gk, h_raw, rho)
            kept = prune(h_raw)
            oh = build_option_hierarchy(kept, model, node_map=by_kid)
            carry: dict[int, int] = {}
            if variant == "update" and oh_prev is not None:
                old_by_key = {_key(o): o for o in oh_prev.options}
                for o in oh.options:
                    old = old_by_key.get(_key(o))
                    if old is None:
                        continue
                    _carry_option(o, old, model.n_primitives, offline.q0)
                    carry[o.uid] = old.uid
            train_option_policies(oh, model, offline, seed=seed,
                                  known_edges=edges)
            tr.swap_inventory(oh.options, carry=carry or None)
            if on_revision is not None:
                on_revision(Revision(
                    index=rev_index,
                    stage=stage,
                    known_states=len(by_kid),
                    known_edges=len(edges),
                    raw_levels=h_raw.cluster_counts(),
                    kept_levels=kept.cluster_counts(),
                    skills=len(oh.options),
                    carried=len(carry),
                    hierarchy=h_raw,
                    options=oh,
                ))
            oh_prev = oh
            rev_index += 1
        if stage % epoch_len == 0:
            epoch = stage // epoch_len - 1
            curve.append(
                tr.evaluate(max_steps=eval_max_steps, rng=eval_rng(seed, epoch))
            )
    return curve, h_raw
