"""Towers of Hanoi as a tabular environment.

State is a tuple giving the pole of each disc, smallest first; with d
discs on 3 poles there are 3^d states and all of them are reachable.
Actions are the six ordered pole pairs; a move is legal when the source
pole is non-empty and its top disc is smaller than the target's.  The
task is to shift the full tower from the leftmost pole to the rightmost.
"""

from __future__ import annotations

from .base import Env, State

ACTION_PAIRS = tuple((s, t) for s in range(3) for t in range(3) if s != t)


class Hanoi(Env):
    def __init__(self, discs: int = 4):
        if discs < 1:
            raise ValueError("need at least one disc")
        self.discs = discs
        self.start = (0,) * discs
        self.goal = (2,) * discs

    def _top(self, state: State, pole: int) -> int | None:
        for disc, p in enumerate(state):
            if p == pole:
                return disc
        return None

    def actions(self, state: State):
        legal = []
        for aid, (src, tgt) in enumerate(ACTION_PAIRS):
            moving = self._top(state, src)
            if moving is None:
                continue
            blocking = self._top(state, tgt)
            if blocking is None or moving < blocking:
                legal.append(aid)
        return tuple(legal)

    def step(self, state: State, action: int):
        src, tgt = ACTION_PAIRS[action]
        moving = self._top(state, src)
        blocking = self._top(state, tgt)
        if moving is not None and (blocking is None or moving < blocking):
            lst = list(state)
            lst[moving] = tgt
            nxt = tuple(lst)
        else:
            nxt = state
        return nxt, self.reward(state, nxt)

    def is_terminal(self, state: State) -> bool:
        return state == self.goal

    def start_support(self):
        return [self.start]

    def reset(self, seed=None) -> State:
        return self.start


def make_hanoi(discs: int = 4) -> Hanoi:
    return Hanoi(discs)
