"""Task environments used for skill discovery experiments.

All environments expose the small `Env` interface from `base`: a finite
action set per state, deterministic transitions, and a task layer
(start states, terminal predicate, step cost, goal reward) that is kept
separate from the dynamics so transition graphs stay task-agnostic.
"""

from __future__ import annotations

import numpy as np

from .base import GOAL_REWARD, STEP_COST, Env
from .gridworld import (
    GridLayout,
    Gridworld,
    MultiFloorOffice,
    load_gridworld,
    load_layout,
    make_multi_floor_office,
)
from .hanoi import Hanoi, make_hanoi
from .pinball import (
    PinballGeometry,
    collision_free,
    load_pinball_geometry,
    sample_pinball_states,
)
from .taxi import Taxi, make_taxi

__all__ = [
    "Env",
    "STEP_COST",
    "GOAL_REWARD",
    "GridLayout",
    "Gridworld",
    "MultiFloorOffice",
    "load_layout",
    "load_gridworld",
    "make_multi_floor_office",
    "Taxi",
    "make_taxi",
    "Hanoi",
    "make_hanoi",
    "PinballGeometry",
    "load_pinball_geometry",
    "collision_free",
    "sample_pinball_states",
    "make_env",
    "ENV_NAMES",
]

ENV_NAMES = ("rooms", "grid", "maze", "office", "office-multi", "taxi", "hanoi")


def make_env(name: str, rng: np.random.Generator | None = None, discs: int = 4) -> Env:
    """Build an environment by name.

    Grid-based names load their bundled layout; `office-multi:<floors>`
    stacks copies of the office layout connected by an elevator.  When
    `rng` is given, start and goal cells are drawn from the layout's
    candidate markers instead of taking the first one.
    """
    if name == "taxi":
        return make_taxi()
    if name == "hanoi":
        return make_hanoi(discs=discs)
    if name == "office-multi" or name.startswith("office-multi:"):
        floors = 3
        if ":" in name:
            floors = int(name.split(":", 1)[1])
        if floors < 1:
            raise ValueError("office-multi needs at least one floor")
        return make_multi_floor_office(floors=floors, rng=rng)
    if name in ("rooms", "grid", "maze", "office"):
        return load_gridworld(name, rng=rng)
    raise ValueError(f"unknown environment {name!r}; known: {', '.join(ENV_NAMES)}")
