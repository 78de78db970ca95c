"""Gridworld environments defined by ASCII layouts.

Layout characters: '#' wall, '.' floor, 'S' floor and start candidate,
'G' floor and goal candidate, 'E' floor and elevator (multi-floor
buildings only).  Agents move north/south/east/west; a move into a wall
or off the map leaves the state unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .base import Env, State

# action ids: 0 north, 1 south, 2 east, 3 west
MOVES = ((-1, 0), (1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class GridLayout:
    rows: tuple[str, ...]

    @classmethod
    def parse(cls, text: str) -> "GridLayout":
        rows = tuple(line for line in text.splitlines() if line.strip())
        if not rows:
            raise ValueError("empty layout")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("layout rows must have equal length")
        bad = set("".join(rows)) - set("#.SGE")
        if bad:
            raise ValueError(f"unknown layout characters: {sorted(bad)}")
        layout = cls(rows)
        if not layout.floor_cells():
            raise ValueError("layout has no floor cells")
        return layout

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def is_floor(self, r: int, c: int) -> bool:
        return 0 <= r < self.height and 0 <= c < self.width and self.rows[r][c] != "#"

    def _cells(self, chars: str) -> list[tuple[int, int]]:
        return [
            (r, c)
            for r, row in enumerate(self.rows)
            for c, ch in enumerate(row)
            if ch in chars
        ]

    def floor_cells(self) -> list[tuple[int, int]]:
        return self._cells(".SGE")

    def start_candidates(self) -> list[tuple[int, int]]:
        return self._cells("S")

    def goal_candidates(self) -> list[tuple[int, int]]:
        return self._cells("G")

    def elevator(self) -> tuple[int, int]:
        cells = self._cells("E")
        if len(cells) != 1:
            raise ValueError("layout must have exactly one elevator cell")
        return cells[0]


def load_layout(name: str) -> GridLayout:
    """Load one of the packaged layouts by name (e.g. 'rooms')."""
    text = (
        resources.files("louvain_skills.environments")
        .joinpath(f"layouts/{name}.txt")
        .read_text()
    )
    return GridLayout.parse(text)


class Gridworld(Env):
    """Single-floor gridworld with one start and one goal cell."""

    def __init__(self, layout: GridLayout, start: tuple[int, int], goal: tuple[int, int]):
        if not layout.is_floor(*start) or not layout.is_floor(*goal):
            raise ValueError("start and goal must be floor cells")
        if start == goal:
            raise ValueError("start and goal must differ")
        self.layout = layout
        self.start = start
        self.goal = goal

    def actions(self, state: State):
        return (0, 1, 2, 3)

    def step(self, state: State, action: int):
        r, c = state
        dr, dc = MOVES[action]
        nxt = (r + dr, c + dc)
        if not self.layout.is_floor(*nxt):
            nxt = state
        return nxt, self.reward(state, nxt)

    def is_terminal(self, state: State) -> bool:
        return state == self.goal

    def start_support(self):
        return list(self.layout.start_candidates())

    def reset(self, seed=None) -> State:
        return self.start


def load_gridworld(
    layout: GridLayout | str,
    start: tuple[int, int] | None = None,
    goal: tuple[int, int] | None = None,
    rng=None,
) -> Gridworld:
    """Build a gridworld, drawing unspecified start/goal from the layout's
    candidate cells with `rng` (first candidate if no rng is given)."""
    if isinstance(layout, str):
        layout = load_layout(layout)
    start = start if start is not None else _pick(layout.start_candidates(), rng)
    goals = [cell for cell in layout.goal_candidates() if cell != start]
    goal = goal if goal is not None else _pick(goals, rng)
    return Gridworld(layout, start, goal)


def _pick(candidates, rng):
    if not candidates:
        raise ValueError("layout lacks the required candidate cells")
    if rng is None:
        return candidates[0]
    return candidates[int(rng.integers(len(candidates)))]


class MultiFloorOffice(Env):
    """Identical floors stacked and linked by an elevator cell.

    States are (floor, row, col).  The elevator cell offers two extra
    actions, 4 up and 5 down, which do nothing at the top and bottom
    floor respectively.  Episodes start on floor 0 and the goal sits on
    the top floor.
    """

    def __init__(
        self,
        floors: int,
        layout: GridLayout,
        start: tuple[int, int],
        goal: tuple[int, int],
    ):
        if floors < 1:
            raise ValueError("need at least one floor")
        self.floors = floors
        self.layout = layout
        self.elevator = layout.elevator()
        self.start = (0, *start)
        self.goal = (floors - 1, *goal)
        if self.start == self.goal:
            raise ValueError("start and goal must differ")

    def actions(self, state: State):
        _, r, c = state
        if (r, c) == self.elevator:
            return (0, 1, 2, 3, 4, 5)
        return (0, 1, 2, 3)

    def step(self, state: State, action: int):
        f, r, c = state
        if action < 4:
            dr, dc = MOVES[action]
            nxt = (f, r + dr, c + dc)
            if not self.layout.is_floor(r + dr, c + dc):
                nxt = state
        elif action == 4:
            nxt = (f + 1, r, c) if f + 1 < self.floors else state
        else:
            nxt = (f - 1, r, c) if f > 0 else state
        return nxt, self.reward(state, nxt)

    def is_terminal(self, state: State) -> bool:
        return state == self.goal

    def start_support(self):
        return [(0, r, c) for r, c in self.layout.start_candidates()]

    def reset(self, seed=None) -> State:
        return self.start


def make_multi_floor_office(
    floors: int,
    layout: GridLayout | str = "office",
    start: tuple[int, int] | None = None,
    goal: tuple[int, int] | None = None,
    rng=None,
) -> MultiFloorOffice:
    if isinstance(layout, str):
        layout = load_layout(layout)
    start = start if start is not None else _pick(layout.start_candidates(), rng)
    goals = layout.goal_candidates()
    if floors == 1:
        goals = [cell for cell in goals if cell != start]
    goal = goal if goal is not None else _pick(goals, rng)
    return MultiFloorOffice(floors, layout, start, goal)
