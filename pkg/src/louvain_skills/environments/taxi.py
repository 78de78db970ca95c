"""The classic 5x5 taxi domain.

State is (taxi_row, taxi_col, passenger, destination) where passenger is
0..3 for a passenger waiting at pad R/G/Y/B, IN_TAXI once picked up and
DELIVERED after a successful put-down at the destination pad.  Episodes
start with the passenger waiting somewhere other than the destination.
Pick-up and put-down only work where they make sense; anywhere else they
leave the state unchanged.  Once the passenger boards there is no way
back to a waiting state, so each destination's transition graph funnels
one-way into its in-taxi region.
"""

from __future__ import annotations

import numpy as np

from .base import Env, State

PADS = ((0, 0), (0, 4), (4, 0), (4, 3))  # R, G, Y, B
IN_TAXI = 4
DELIVERED = 5

# (row, col) pairs with a wall between col and col+1
WALLS = {(0, 1), (1, 1), (3, 0), (4, 0), (3, 2), (4, 2)}

MOVES = ((-1, 0), (1, 0), (0, 1), (0, -1))
PICKUP, PUTDOWN = 4, 5


class Taxi(Env):
    def actions(self, state: State):
        if self.is_terminal(state):
            return ()
        return (0, 1, 2, 3, PICKUP, PUTDOWN)

    def step(self, state: State, action: int):
        row, col, pas, dest = state
        if action < 4:
            dr, dc = MOVES[action]
            r2, c2 = row + dr, col + dc
            if not (0 <= r2 < 5 and 0 <= c2 < 5) or self._blocked(row, col, dr, dc):
                r2, c2 = row, col
            nxt = (r2, c2, pas, dest)
        elif action == PICKUP:
            if pas < IN_TAXI and (row, col) == PADS[pas]:
                nxt = (row, col, IN_TAXI, dest)
            else:
                nxt = state
        else:
            if pas == IN_TAXI and (row, col) == PADS[dest]:
                nxt = (row, col, DELIVERED, dest)
            else:
                nxt = state
        return nxt, self.reward(state, nxt)

    @staticmethod
    def _blocked(row, col, dr, dc) -> bool:
        if dr != 0:
            return False
        if dc == 1:
            return (row, col) in WALLS
        return (row, col - 1) in WALLS

    def is_terminal(self, state: State) -> bool:
        return state[2] == DELIVERED

    def start_support(self):
        return [
            (r, c, pas, dest)
            for r in range(5)
            for c in range(5)
            for pas in range(4)
            for dest in range(4)
            if pas != dest
        ]

    def reset(self, seed=None) -> State:
        rng = np.random.default_rng(seed)
        starts = self.start_support()
        return starts[int(rng.integers(len(starts)))]


def make_taxi() -> Taxi:
    return Taxi()
