"""Deterministic tabular environment interface.

States are hashable descriptors and actions are small ints.  `step` is a
pure function of (state, action) so the same instance can serve both as
a simulator and as the dynamics model behind graph extraction.  `actions`
describes the underlying dynamics; episode termination (`is_terminal`) is
a property of the task layered on top, so e.g. a gridworld still reports
movement actions at the goal cell and its transition graph stays
symmetric.

Rewards: every action costs STEP_COST, and a transition into a goal
state earns GOAL_REWARD on top.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterator, Sequence

STEP_COST = 0.001
GOAL_REWARD = 1.0

State = Hashable


class Env:
    def actions(self, state: State) -> Sequence[int]:
        raise NotImplementedError

    def step(self, state: State, action: int) -> tuple[State, float]:
        raise NotImplementedError

    def is_terminal(self, state: State) -> bool:
        raise NotImplementedError

    def start_support(self) -> list[State]:
        """All states an episode may start in, in a fixed canonical order."""
        raise NotImplementedError

    def reset(self, seed=None) -> State:
        """Draw an episode start state.  `seed` may be an int or a numpy
        Generator; fixed-start environments ignore it."""
        raise NotImplementedError

    def goal(self, state: State) -> bool:
        """Whether `state` is a goal.  Tasks here end exactly at goals."""
        return self.is_terminal(state)

    def reward(self, state: State, next_state: State) -> float:
        r = -STEP_COST
        if self.is_terminal(next_state) and not self.is_terminal(state):
            r += GOAL_REWARD
        return r

    def enumerate(self) -> Iterator[tuple[State, int, State]]:
        """Every (state, action, next_state) triple reachable from the start
        support, including self-transitions from ineffective actions."""
        seen = set()
        queue: deque[State] = deque()
        for s in self.start_support():
            if s not in seen:
                seen.add(s)
                queue.append(s)
        while queue:
            s = queue.popleft()
            for a in self.actions(s):
                s2, _ = self.step(s, a)
                if s2 not in seen:
                    seen.add(s2)
                    queue.append(s2)
                yield s, a, s2
