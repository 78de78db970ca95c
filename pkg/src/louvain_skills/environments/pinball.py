"""Pinball-style continuous domain: obstacle geometry and state sampling.

The domain is the unit square minus a set of polygonal obstacles; a ball
of fixed radius moves through the free space.  For graph-based skill
discovery the continuous state space is represented by a sample of
collision-free ball positions, later linked into a k-nearest-neighbour
graph.  A position is collision-free when the ball fits inside the
square without touching any obstacle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
import shapely


@dataclass(frozen=True)
class PinballGeometry:
    obstacles: tuple[tuple[tuple[float, float], ...], ...]
    ball_radius: float
    start: tuple[float, float]
    goal: tuple[float, float]

    @classmethod
    def from_json(cls, text: str) -> "PinballGeometry":
        doc = json.loads(text)
        obstacles = tuple(
            tuple((float(x), float(y)) for x, y in poly) for poly in doc["obstacles"]
        )
        if any(len(poly) < 3 for poly in obstacles):
            raise ValueError("obstacle polygons need at least three vertices")
        radius = float(doc["ball_radius"])
        if not 0.0 < radius < 0.5:
            raise ValueError("ball radius must lie in (0, 0.5)")
        return cls(
            obstacles=obstacles,
            ball_radius=radius,
            start=tuple(doc["start"]),
            goal=tuple(doc["goal"]),
        )

    def polygons(self) -> list[shapely.Polygon]:
        return [shapely.Polygon(poly) for poly in self.obstacles]


def load_pinball_geometry(name: str = "pinball") -> PinballGeometry:
    text = (
        resources.files("louvain_skills.environments")
        .joinpath(f"layouts/{name}.json")
        .read_text()
    )
    return PinballGeometry.from_json(text)


def collision_free(geom: PinballGeometry, points: np.ndarray) -> np.ndarray:
    """Boolean mask of positions where the ball fits without collision."""
    pts = np.asarray(points, dtype=float)
    r = geom.ball_radius
    ok = np.all((pts >= r) & (pts <= 1.0 - r), axis=1)
    shapely_pts = shapely.points(pts)
    for poly in geom.polygons():
        ok &= shapely.distance(shapely_pts, poly) > r
    return ok


def sample_pinball_states(
    geom: PinballGeometry, n: int, seed: int = 0, batch: int = 4096
) -> np.ndarray:
    """Rejection-sample `n` collision-free ball positions, uniformly over
    the free space.  Raises if the acceptance rate falls below 1%, which
    signals degenerate geometry rather than bad luck."""
    rng = np.random.default_rng(seed)
    kept: list[np.ndarray] = []
    total_kept = 0
    proposed = 0
    while total_kept < n:
        pts = rng.random((batch, 2))
        proposed += batch
        good = pts[collision_free(geom, pts)]
        kept.append(good)
        total_kept += len(good)
        if proposed >= 50_000 and total_kept / proposed < 0.01:
            raise RuntimeError(
                f"pinball sampling acceptance rate {total_kept / proposed:.2%} "
                "below 1%; obstacle geometry leaves almost no free space"
            )
    return np.concatenate(kept)[:n]
