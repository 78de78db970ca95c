"""Tabular learning over mixtures of primitive actions and skills.

The agent's action set is the union of the primitive actions and every
skill whose initiation set contains the current state, all competing in
one action-value table.  Executing a skill pushes a call-stack frame;
its frozen internal policy picks children (lower skills, bottoming out
at primitives) until the skill terminates.  Exploration is
epsilon-greedy at every level of the stack.

Updates per primitive step:
  * the executed primitive gets a plain one-step Q-learning update;
  * every popped frame gets a multi-step update over its recorded
    duration and accumulated discounted reward;
  * skills whose greedy child chain could have produced a recent
    primitive transition get one-step off-policy updates, applied in
    batch whenever any skill terminates and at episode end.

Values for terminal states stay at zero: no decision stage ever starts
there and bootstrap targets short-circuit to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import StateIndex

EVAL_SPAWN = 1_000_000  # spawn-key namespace for per-epoch evaluation rngs


@dataclass(frozen=True)
class TrainParams:
    alpha: float = 0.4
    gamma: float = 1.0
    q0: float = 0.0
    epsilon: float = 0.1
    episode_cap: int = 10_000


class TabularModel:
    """Action-labelled deterministic dynamics cached from an Env.

    States get dense ids in sorted order, matching
    extract_transition_graph, so graph node ids and model state ids
    agree for the same environment regardless of start placement.
    """

    def __init__(self, env, states=None):
        self.env = env
        index = StateIndex()
        if states is not None:
            # adopt a canonical enumeration so state ids line up with a
            # model built for a sibling env (same dynamics, other task)
            for s in states:
                index.add(s)
        else:
            seen = set(env.start_support())
            frontier = list(seen)
            while frontier:
                state = frontier.pop()
                for a in env.actions(state):
                    nxt, _ = env.step(state, a)
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
            for s in sorted(seen):
                index.add(s)
        # safety net: tasks whose resets stray off the canonical list
        # still get ids, appended after it
        for s in env.start_support():
            if s not in index:
                index.add(s)
        head = 0
        while head < len(index):
            state = index.state_of(head)
            for a in env.actions(state):
                nxt, _ = env.step(state, a)
                if nxt not in index:
                    index.add(nxt)
            head += 1
        n = len(index)
        self.index = index
        self.n_states = n
        self.actions = [tuple(env.actions(index.state_of(u))) for u in range(n)]
        self.n_primitives = 1 + max(
            (a for acts in self.actions for a in acts), default=-1
        )
        self.next_state = [[-1] * self.n_primitives for _ in range(n)]
        self.reward = [[0.0] * self.n_primitives for _ in range(n)]
        for u in range(n):
            state = index.state_of(u)
            for a in self.actions[u]:
                nxt, r = env.step(state, a)
                self.next_state[u][a] = index.id_of(nxt)
                self.reward[u][a] = r
        self.terminal = [bool(env.is_terminal(index.state_of(u))) for u in range(n)]

    def id_of(self, state) -> int:
        return self.index.id_of(state)

    def state_of(self, u: int):
        return self.index.state_of(u)

    def states(self):
        return [self.index.state_of(u) for u in range(self.n_states)]


def _first_max(row, ids):
    best = ids[0]
    bv = row[best]
    for a in ids[1:]:
        v = row[a]
        if v > bv:
            bv = v
            best = a
    return best


class Runtime:
    """Per-(model, inventory) caches used by training and evaluation.

    The inventory is a list of skill objects with uids n_primitives,
    n_primitives+1, ... in list order.  Admissible actions per state,
    each skill's admissible children per state, and the greedy-chain
    primitive masks used for the off-policy consistency test are all
    precomputed here; skill-internal policies are frozen during task
    learning, so none of this changes between inventory swaps.
    """

    def __init__(self, model: TabularModel, inventory):
        self.model = model
        self.inventory = list(inventory)
        n_prim = model.n_primitives
        for pos, o in enumerate(self.inventory):
            if o.uid != n_prim + pos:
                raise ValueError("inventory uids must be contiguous from n_primitives")
        self.n_actions = n_prim + len(self.inventory)
        self.admissible = []
        for u in range(model.n_states):
            ids = list(model.actions[u])
            for o in self.inventory:
                if u in o.source:
                    ids.append(o.uid)
            self.admissible.append(tuple(ids))
        self.child_ids: dict[int, dict[int, tuple[int, ...]]] = {}
        for o in self._with_descendants():
            per_state = {}
            for u in sorted(o.source):
                if model.terminal[u]:
                    continue
                ids = tuple(ch for ch in o.children if self._child_ok(o, ch, u))
                if not ids:
                    # partially known graphs can leave states of a skill's
                    # source uncovered by any child; primitives stand in
                    ids = tuple(model.actions[u])
                per_state[u] = ids
            self.child_ids[id(o)] = per_state
        self.masks = self._greedy_masks()

    def _with_descendants(self):
        seen: dict[int, object] = {}
        stack = list(self.inventory)
        while stack:
            o = stack.pop()
            if id(o) in seen:
                continue
            seen[id(o)] = o
            stack.extend(o.child_lookup.values())
        return sorted(seen.values(), key=lambda o: (o.level, o.uid))

    def _child_ok(self, o, ch, u):
        if ch < self.model.n_primitives:
            return ch in self.model.actions[u]
        return u in o.child_lookup[ch].source

    def greedy_tied(self, o, u) -> tuple[int, ...]:
        """Child ids of `o` tied for the greedy choice at state `u`."""
        ids = self.child_ids[id(o)].get(u)
        if ids is None:
            return ()
        pos = {ch: k for k, ch in enumerate(o.children)}
        if ids[0] not in pos:
            return ids[:1]  # primitive fallback: nothing to rank
        if o.q is None or u not in o.q:
            pick = o.policy.get(u) if o.policy else None
            return (pick,) if pick is not None and pick in ids else ids[:1]
        row = o.q[u]
        best = max(row[pos[ch]] for ch in ids)
        return tuple(ch for ch in ids if row[pos[ch]] == best)

    def greedy_child(self, o, u) -> int:
        return self.greedy_tied(o, u)[0]

    def _greedy_masks(self):
        # bitmask over primitives reachable by each skill's greedy chain,
        # built bottom-up; used to test transition consistency off-policy
        by_key: dict[int, dict[int, int]] = {}
        for o in self._with_descendants():
            table = {}
            for u in self.child_ids[id(o)]:
                bits = 0
                for ch in self.greedy_tied(o, u):
                    if ch < self.model.n_primitives:
                        bits |= 1 << ch
                    else:
                        bits |= by_key[id(o.child_lookup[ch])].get(u, 0)
                table[u] = bits
            by_key[id(o)] = table
        return {o.uid: by_key[id(o)] for o in self.inventory}


class _Frame:
    __slots__ = ("option", "start", "reward", "tau")

    def __init__(self, option, start):
        self.option = option
        self.start = start
        self.reward = 0.0
        self.tau = 0


class Trainer:
    """One learning run: environment, value table, call stack, rng."""

    def __init__(self, env, inventory, params: TrainParams = TrainParams(),
                 seed: int = 0, model: TabularModel | None = None):
        self.env = env
        self.model = model if model is not None else TabularModel(env)
        self.params = params
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.runtime = Runtime(self.model, inventory)
        self.q = [
            [params.q0] * self.runtime.n_actions for _ in range(self.model.n_states)
        ]
        self.stack: list[_Frame] = []
        self.pending: list[tuple[int, int, float, int]] = []
        self.stages = 0
        self._old_runtimes: list[Runtime] = []
        self._stale_carry: dict[int, int] = {}
        self._begin_episode()

    def _begin_episode(self):
        self.state = self.model.id_of(self.env.reset(self.rng))
        self.episode_steps = 0

    def swap_inventory(self, inventory, carry: dict[int, int] | None = None):
        """Replace the skill inventory mid-run.

        New value columns start at q0; `carry` maps new uid -> old uid
        for skills that persist and keep their learned task values.
        Primitive columns always persist.  Frames already on the stack
        keep executing their old skill objects until they terminate;
        their pop-time updates land on the carried column if one exists
        and are dropped otherwise.  Pending consistency updates are
        flushed against the old inventory before it goes away.
        """
        self._flush_pending()
        old_q = self.q
        self._old_runtimes.append(self.runtime)
        self.runtime = Runtime(self.model, inventory)
        n_prim = self.model.n_primitives
        q0 = self.params.q0
        self.q = [
            old_q[u][:n_prim] + [q0] * len(inventory)
            for u in range(self.model.n_states)
        ]
        if carry:
            for new_uid, old_uid in carry.items():
                for u in range(self.model.n_states):
                    self.q[u][new_uid] = old_q[u][old_uid]
        self._stale_carry = dict(carry or {})

    def _rt_for(self, o) -> Runtime:
        if id(o) in self.runtime.child_ids:
            return self.runtime
        for rt in reversed(self._old_runtimes):
            if id(o) in rt.child_ids:
                return rt
        raise KeyError(f"no runtime knows skill {o.uid}")

    def _live_uid(self, o):
        """Current value-table column for a skill object, or None if the
        skill no longer exists after an inventory swap."""
        idx = o.uid - self.model.n_primitives
        inv = self.runtime.inventory
        if 0 <= idx < len(inv) and inv[idx] is o:
            return o.uid
        for new_uid, old_uid in self._stale_carry.items():
            if old_uid == o.uid:
                return new_uid
        return None

    def _max_admissible(self, u):
        if self.model.terminal[u]:
            return 0.0
        row = self.q[u]
        return max(row[a] for a in self.runtime.admissible[u])

    def _choose(self, ids, row, eps):
        if eps > 0.0 and self.rng.random() < eps:
            return ids[int(self.rng.integers(len(ids)))]
        return _first_max(row, ids)

    def _choose_child(self, o, u, eps):
        rt = self._rt_for(o)
        ids = rt.child_ids[id(o)][u]
        if eps > 0.0 and self.rng.random() < eps:
            return ids[int(self.rng.integers(len(ids)))]
        return rt.greedy_child(o, u)

    def _terminates(self, o, v):
        # source and target partition the region, so "not in source"
        # covers leaving the region once target membership is checked
        return self.model.terminal[v] or v in o.target or v not in o.source

    def _pop_update(self, frame, v):
        uid = self._live_uid(frame.option)
        if uid is None:
            return
        p = self.params
        boot = (p.gamma ** frame.tau) * self._max_admissible(v)
        row = self.q[frame.start]
        row[uid] += p.alpha * (frame.reward + boot - row[uid])

    def _flush_pending(self):
        if not self.pending:
            return
        p = self.params
        model = self.model
        rt = self.runtime
        for u, a, r, v in self.pending:
            for o in rt.inventory:
                m = rt.masks[o.uid].get(u)
                if m is None or not (m >> a) & 1:
                    continue
                if model.terminal[v]:
                    target = r
                elif v in o.target or v not in o.source:
                    target = r + p.gamma * self._max_admissible(v)
                else:
                    target = r + p.gamma * self.q[v][o.uid]
                row = self.q[u]
                row[o.uid] += p.alpha * (target - row[o.uid])
        self.pending.clear()

    def run_stage(self):
        """Advance one primitive step (decision stage), learning."""
        p = self.params
        model = self.model
        u = self.state
        if not self.stack:
            holder = None
            a = self._choose(self.runtime.admissible[u], self.q[u], p.epsilon)
        else:
            holder = self.stack[-1].option
            a = self._choose_child(holder, u, p.epsilon)
        while a >= model.n_primitives:
            o = (
                self.runtime.inventory[a - model.n_primitives]
                if holder is None
                else holder.child_lookup[a]
            )
            self.stack.append(_Frame(o, u))
            holder = o
            a = self._choose_child(o, u, p.epsilon)
        v = model.next_state[u][a]
        r = model.reward[u][a]
        boot = 0.0 if model.terminal[v] else p.gamma * self._max_admissible(v)
        row = self.q[u]
        row[a] += p.alpha * (r + boot - row[a])
        for f in self.stack:
            f.reward += (p.gamma ** f.tau) * r
            f.tau += 1
        self.pending.append((u, a, r, v))
        cut = None
        for k, f in enumerate(self.stack):
            if self._terminates(f.option, v):
                cut = k
                break
        if cut is not None:
            # an outer skill ending takes everything beneath it down too
            self._flush_pending()
            while len(self.stack) > cut:
                self._pop_update(self.stack.pop(), v)
        self.state = v
        self.stages += 1
        self.episode_steps += 1
        if model.terminal[v]:
            self._flush_pending()
            self.stack.clear()
            self._begin_episode()
        elif self.episode_steps >= p.episode_cap:
            # administrative truncation: one-step updates already landed,
            # unfinished frames are dropped without a multi-step update
            self._flush_pending()
            self.stack.clear()
            self._begin_episode()
        return u, a, r, v

    def run_stages(self, n: int):
        for _ in range(n):
            self.run_stage()

    def evaluate(self, max_steps: int = 10_000, rng=None) -> float:
        return greedy_return(
            self.env, self.q, self.runtime, max_steps=max_steps, rng=rng
        )


def greedy_return(env, q, runtime: Runtime, max_steps: int = 10_000,
                  rng=None) -> float:
    """Undiscounted return of one fully greedy episode with learning and
    exploration disabled, from a fresh reset of the task.  Argmax ties
    break toward the lowest action id at every level of the stack."""
    model = runtime.model
    u = model.id_of(env.reset(rng))
    total = 0.0
    stack: list = []
    for _ in range(max_steps):
        if model.terminal[u]:
            break
        if not stack:
            holder = None
            a = _first_max(q[u], runtime.admissible[u])
        else:
            holder = stack[-1]
            a = runtime.greedy_child(holder, u)
        while a >= model.n_primitives:
            o = (
                runtime.inventory[a - model.n_primitives]
                if holder is None
                else holder.child_lookup[a]
            )
            stack.append(o)
            holder = o
            a = runtime.greedy_child(o, u)
        v = model.next_state[u][a]
        total += model.reward[u][a]
        cut = None
        for k, o in enumerate(stack):
            if model.terminal[v] or v in o.target or v not in o.source:
                cut = k
                break
        if cut is not None:
            del stack[cut:]
        u = v
    return total


def evaluate(env, q, inventory, max_steps: int = 10_000,
             model: TabularModel | None = None, rng=None) -> float:
    model = model if model is not None else TabularModel(env)
    return greedy_return(env, q, Runtime(model, inventory), max_steps, rng=rng)


def eval_rng(seed: int, epoch: int) -> np.random.Generator:
    """Start-state stream for one epoch's evaluation, kept apart from the
    training stream so evaluating never perturbs what is learned."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(EVAL_SPAWN, epoch))
    )


def run_training(env, inventory, params: TrainParams = TrainParams(),
                 epochs: int = 40, epoch_len: int = 100, seed: int = 0,
                 eval_max_steps: int = 10_000,
                 model: TabularModel | None = None):
    """Train for epochs*epoch_len decision stages, evaluating greedily
    after each epoch.  Returns (q, curve).  Deterministic per seed."""
    tr = Trainer(env, inventory, params=params, seed=seed, model=model)
    curve = []
    for epoch in range(epochs):
        tr.run_stages(epoch_len)
        curve.append(
            tr.evaluate(max_steps=eval_max_steps, rng=eval_rng(seed, epoch))
        )
    return tr.q, curve
