"""Travel-time costs for aerial robots flying through a steady planar wind."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import WindExceedsAirspeed


@dataclass(frozen=True)
class WindModel:
    speed: float = 0.0
    direction: float = 0.0  # radians from +x, the direction the wind blows toward

    @property
    def vector(self) -> tuple[float, float]:
        return (self.speed * math.cos(self.direction), self.speed * math.sin(self.direction))

    def reversed(self) -> "WindModel":
        return WindModel(self.speed, self.direction + math.pi)


@dataclass(frozen=True)
class RobotParams:
    """Robot speeds, capacity and turn limits.

    Costs and demands are in seconds, speeds in m/s, ``capacity`` is the
    per-route budget Q and ``setup_cost`` the fixed per-route cost added on
    launch.  The turn parameters only matter for turn-aware planning.
    """

    v_service: float = 7.0
    v_deadhead: float = 10.0
    capacity: float = 1200.0
    setup_cost: float = 0.0
    omega_max: float = math.pi / 4
    a_max: float = 3.0
    delta_max: float = 2.0
    min_speed: float = 0.0
    depot_headings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.v_service <= 0 or self.v_deadhead <= 0:
            raise ValueError("speeds must be positive")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if self.setup_cost < 0:
            raise ValueError("setup cost must be non-negative")

    @property
    def capacity_limit(self) -> float:
        # demand <= Q, with room for summation-order rounding
        return self.capacity * (1.0 + 1e-9)

    def depot_heading(self, depot: int) -> float:
        return float(self.depot_headings.get(depot, 0.0))

    def with_(self, **changes) -> "RobotParams":
        return replace(self, **changes)


def _check_wind(v: float, w: float) -> None:
    if w > 0 and w >= v:
        raise WindExceedsAirspeed(f"wind speed {w} must be below travel speed {v}")


def effective_speed(v: float, wind: WindModel, phi: float) -> float:
    """Ground speed along a track at angle ``phi`` from the wind vector."""
    w = wind.speed
    _check_wind(v, w)
    rad = v * v - (w * math.sin(phi)) ** 2
    return w * math.cos(phi) + math.sqrt(max(rad, 0.0))


def travel_time(p_tail, p_head, v: float, wind: WindModel = WindModel()) -> float:
    """Straight-line traversal time from ``p_tail`` to ``p_head``."""
    dx = float(p_head[0]) - float(p_tail[0])
    dy = float(p_head[1]) - float(p_tail[1])
    dist = math.hypot(dx, dy)
    _check_wind(v, wind.speed)
    if dist == 0.0:
        return 0.0
    if wind.speed == 0.0:
        return dist / v
    wx, wy = wind.vector
    # w*cos(phi) is the wind component along the track, w*sin(phi) the cross component
    along = (wx * dx + wy * dy) / dist
    cross = (wx * dy - wy * dx) / dist
    return dist / (along + math.sqrt(max(v * v - cross * cross, 0.0)))


def travel_time_matrix(src, dst, v: float, wind: WindModel = WindModel(), chunk: int = 1024) -> np.ndarray:
    """Pairwise straight-line travel times, shape ``(len(src), len(dst))``."""
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    _check_wind(v, wind.speed)
    wx, wy = wind.vector
    out = np.empty((len(src), len(dst)))
    for lo in range(0, len(src), chunk):
        block = src[lo:lo + chunk]
        dx = dst[None, :, 0] - block[:, None, 0]
        dy = dst[None, :, 1] - block[:, None, 1]
        dist = np.hypot(dx, dy)
        if wind.speed == 0.0:
            out[lo:lo + chunk] = dist / v
            continue
        with np.errstate(invalid="ignore", divide="ignore"):
            along = (wx * dx + wy * dy) / dist
            cross = (wx * dy - wy * dx) / dist
            veff = along + np.sqrt(np.maximum(v * v - cross * cross, 0.0))
            t = dist / veff
        t[dist == 0.0] = 0.0
        out[lo:lo + chunk] = t
    return out


def populate_costs(graph, params: RobotParams, wind: WindModel = WindModel(), overwrite: bool = False):
    """Fill per-direction edge costs and demands from vertex geometry.

    Required edges get service values at ``params.v_service``; every edge
    gets deadhead values at ``params.v_deadhead``.  Demands equal costs.
    Values already present on an edge are kept unless ``overwrite`` is set.
    Self-loops are never derived from geometry.
    """
    coords = graph.coords
    edges = []
    for e in graph.edges:
        changes = {}
        if e.tail != e.head:
            p, q = coords[e.tail], coords[e.head]
            if e.required:
                svc = (travel_time(p, q, params.v_service, wind), travel_time(q, p, params.v_service, wind))
                if overwrite or e.service_cost is None:
                    changes["service_cost"] = svc
                if overwrite or e.service_demand is None:
                    changes["service_demand"] = svc
            dh = (travel_time(p, q, params.v_deadhead, wind), travel_time(q, p, params.v_deadhead, wind))
            if overwrite or e.deadhead_cost is None:
                changes["deadhead_cost"] = dh
            if overwrite or e.deadhead_demand is None:
                changes["deadhead_demand"] = dh
        edges.append(replace(e, **changes) if changes else e)
    return replace(graph, edges=tuple(edges), fly_speed=params.v_deadhead, wind=wind)
