"""Turn-aware leg costs: smooth corner arcs, Dubins curves and MD-MEM-Turns.

Turn legs are priced at nominal airspeed and ignore wind; service arcs keep
their (possibly wind-dependent) costs from the graph.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cost_model import RobotParams
from .errors import GeometryError
from .graph import Arc, Graph
from .mem import mem_state
from .routes import RoutingModel, Solution, Step

TWO_PI = 2.0 * math.pi
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")

# number of corner/Dubins evaluations, for checking that link pricing is O(1)
geometry_evaluations = 0


def _wrap(angle: float) -> float:
    """Normalize to (-pi, pi]."""
    a = math.fmod(angle, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", _wrap(float(self.heading)))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class TurnManeuver:
    """Corner maneuver; ``penalty`` is the time beyond straight traversal of
    the two half edges at cruise speed."""

    kind: str  # none, smooth-arc, decel-arc, stop-turn, dubins
    radius: float = 0.0
    turn_speed: float = 0.0
    duration: float = 0.0
    deviation: float = 0.0
    penalty: float = 0.0


class TurnWarning(UserWarning):
    pass


def corner_deviation(radius: float, theta: float) -> float:
    """Distance from the corner to the midpoint of a tangent arc."""
    s = math.sin(theta / 2)
    return radius * (1.0 - s) / s


def smooth_turn(theta: float, v_cruise: float, params: RobotParams,
                half_len_in: float = math.inf, half_len_out: float = math.inf) -> TurnManeuver:
    """Fastest corner arc between two edges meeting at interior angle ``theta``.

    The arc is tangent to both edges and its midpoint may stray at most
    ``delta_max`` from the corner.  Speed changes happen at ``a_max`` within
    the half edges next to the corner.  Returns ``kind='none'`` for a straight
    continuation and a stop-turn when the robot must halt and rotate.
    """
    global geometry_evaluations
    geometry_evaluations += 1
    if not (0.0 <= theta <= math.pi) or math.isnan(theta):
        raise GeometryError(f"interior angle {theta} outside [0, pi]")
    w, a, dmax = params.omega_max, params.a_max, params.delta_max
    if min(w, a, dmax, v_cruise) <= 0:
        raise GeometryError("turn parameters and cruise speed must be positive")
    v = v_cruise
    if theta >= math.pi - 1e-12:
        return TurnManeuver("none", 0.0, v, 0.0, 0.0, 0.0)
    turn_time = (math.pi - theta) / w
    L = min(half_len_in, half_len_out)
    s = math.sin(theta / 2)
    if theta <= 1e-12 or s >= 1.0:
        u, kind = 0.0, "stop-turn"
    else:
        tan_half = math.tan(theta / 2)
        r_dev = dmax * s / (1.0 - s)
        u_dev = min(v, w * r_dev)

        def need(u):  # straight distance used before the arc
            return (v * v - u * u) / (2 * a) + u / (w * tan_half)

        if u_dev >= v:
            u, kind = v, "smooth-arc"
        else:
            u, kind = u_dev, "decel-arc"
        if need(u) > L:
            B = 2 * a / (w * tan_half)
            C = v * v - 2 * a * L
            if C > 0:
                u, kind = 0.0, "stop-turn"
            else:
                # decelerating over the whole half edge: u^2 - B u - C = 0, lower root
                u = max(0.0, (B - math.sqrt(B * B + 4 * C)) / 2)
                u = min(u, u_dev)
                kind = "decel-arc" if u > 0 else "stop-turn"
    if kind == "stop-turn" and v * v / (2 * a) > L * (1 + 1e-12):
        warnings.warn("half edge too short to stop from cruise speed before the corner", TurnWarning)
    if kind == "stop-turn":
        radius, offset, dev = 0.0, 0.0, 0.0
    else:
        radius = u / w
        offset = radius / math.tan(theta / 2)
        dev = corner_deviation(radius, theta)
    brake = (v * v - u * u) / (2 * a)
    # each half edge: cruise, then brake (or accelerate) between v and u
    extra_half = (v - u) / a - (offset + brake) / v
    penalty = max(0.0, turn_time + 2 * extra_half)
    return TurnManeuver(kind, radius, u, turn_time, dev, penalty)


def smooth_arc_points(corner, d_in, d_out, radius: float, theta: float, n: int = 64) -> np.ndarray:
    """Sample the tangent arc at a corner; ``d_in``/``d_out`` are unit travel directions."""
    c = np.asarray(corner, dtype=float)
    d_in = np.asarray(d_in, dtype=float)
    d_out = np.asarray(d_out, dtype=float)
    if radius == 0.0:
        return np.array([c, c])
    offset = radius / math.tan(theta / 2)
    p0 = c - offset * d_in
    cross = d_in[0] * d_out[1] - d_in[1] * d_out[0]
    side = 1.0 if cross >= 0 else -1.0  # left turn: centre on the left
    normal = side * np.array([-d_in[1], d_in[0]])
    centre = p0 + radius * normal
    start = math.atan2(p0[1] - centre[1], p0[0] - centre[0])
    sweep = side * (math.pi - theta)
    ang = start + np.linspace(0.0, sweep, n)
    return centre + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


# -- Dubins --------------------------------------------------------------

def _mod2pi(x):
    y = np.mod(x, TWO_PI)
    if np.ndim(y) == 0:
        return _mod2pi_scalar(float(y))
    # np.mod lands in [0, 2pi]; fold values within 1e-9 of 2pi onto 0
    y[y > TWO_PI - 1e-9] = 0.0
    return y


def _mod2pi_scalar(x):
    y = x % TWO_PI
    return 0.0 if abs(y - TWO_PI) < 1e-9 else y


class _ArrayOps:
    sin, cos, arctan2, sqrt, arccos, clip, where, abs = (np.sin, np.cos, np.arctan2, np.sqrt, np.arccos, np.clip,
                                                          np.where, np.abs)
    mod2pi = staticmethod(_mod2pi)


class _ScalarOps:
    """Plain-float versions of the operations used below; far cheaper than
    0-d numpy arrays for a single pose pair."""

    sin, cos, arctan2, abs = math.sin, math.cos, math.atan2, abs
    arccos = math.acos
    sqrt = staticmethod(lambda x: math.sqrt(x) if x >= 0 else math.nan)
    clip = staticmethod(lambda x, lo, hi: min(max(x, lo), hi))
    where = staticmethod(lambda c, a, b: a if c else b)
    mod2pi = staticmethod(_mod2pi_scalar)


def _dubins_words(alpha, beta, d, ops=_ArrayOps):
    """Normalized segment lengths (t, p, q) of every word; NaN where invalid."""
    sin, cos, atan2, sqrt, where, m2p = ops.sin, ops.cos, ops.arctan2, ops.sqrt, ops.where, ops.mod2pi
    sa, sb, ca, cb = sin(alpha), sin(beta), cos(alpha), cos(beta)
    cab = cos(alpha - beta)
    out = []
    with np.errstate(invalid="ignore"):
        # LSL
        p2 = 2 + d * d - 2 * cab + 2 * d * (sa - sb)
        tmp = atan2(cb - ca, d + sa - sb)
        p = sqrt(p2)
        out.append((m2p(-alpha + tmp), where(p2 >= 0, p, math.nan), m2p(beta - tmp)))
        # RSR
        p2 = 2 + d * d - 2 * cab + 2 * d * (sb - sa)
        tmp = atan2(ca - cb, d - sa + sb)
        p = sqrt(p2)
        out.append((m2p(alpha - tmp), where(p2 >= 0, p, math.nan), m2p(-beta + tmp)))
        # LSR
        p2 = -2 + d * d + 2 * cab + 2 * d * (sa + sb)
        p = sqrt(p2)
        tmp = atan2(-ca - cb, d + sa + sb) - atan2(-2.0, p)
        out.append((m2p(-alpha + tmp), where(p2 >= 0, p, math.nan), m2p(-m2p(beta) + tmp)))
        # RSL
        p2 = -2 + d * d + 2 * cab - 2 * d * (sa + sb)
        p = sqrt(p2)
        tmp = atan2(ca + cb, d - sa - sb) - atan2(2.0, p)
        out.append((m2p(alpha - tmp), where(p2 >= 0, p, math.nan), m2p(beta - tmp)))
        # RLR
        c = (6 - d * d + 2 * cab + 2 * d * (sa - sb)) / 8
        p = m2p(TWO_PI - ops.arccos(ops.clip(c, -1, 1)))
        t = m2p(alpha - atan2(ca - cb, d - sa + sb) + p / 2)
        out.append((t, where(ops.abs(c) <= 1, p, math.nan), m2p(alpha - beta - t + p)))
        # LRL
        c = (6 - d * d + 2 * cab + 2 * d * (sb - sa)) / 8
        p = m2p(TWO_PI - ops.arccos(ops.clip(c, -1, 1)))
        t = m2p(-alpha - atan2(ca - cb, d + sa - sb) + p / 2)
        out.append((t, where(ops.abs(c) <= 1, p, math.nan), m2p(m2p(beta) - alpha - t + p)))
    return out


def _normalize(x0, y0, h0, x1, y1, h1, r):
    dx, dy = x1 - x0, y1 - y0
    dist = np.hypot(dx, dy)
    # with coincident positions any reference direction works; use the start heading
    th = np.where(dist > 0, np.arctan2(dy, dx), h0)
    return _mod2pi(h0 - th), _mod2pi(h1 - th), dist / r


def _shortest_word(x0, y0, h0, x1, y1, h1, r_min: float):
    global geometry_evaluations
    if r_min <= 0:
        raise GeometryError("turning radius must be positive")
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x0, y0, h0, x1, y1, h1)))
    geometry_evaluations += 1
    alpha, beta, d = _normalize(*arrs, r_min)
    words = _dubins_words(alpha, beta, d)
    shape = np.shape(d)
    best = np.full(shape, np.inf)
    word = np.zeros(shape, dtype=np.int8)
    for i, (t, p, q) in enumerate(words):
        total = t + p + q
        take = np.isfinite(total) & (total < best)
        best = np.where(take, total, best)
        word = np.where(take, i, word)
    return best, word, words


def dubins_lengths(x0, y0, h0, x1, y1, h1, r_min: float):
    """Shortest Dubins length for broadcast arrays of pose pairs.

    Returns ``(length, word_index)``; ties keep the earlier word in ``WORDS``.
    """
    best, word, _ = _shortest_word(x0, y0, h0, x1, y1, h1, r_min)
    return best * r_min, word


@dataclass(frozen=True)
class DubinsPath:
    start: Pose
    radius: float
    word: str
    segments: tuple  # normalized lengths (arc angles in radians, straight in radii)

    @property
    def length(self) -> float:
        return sum(self.segments) * self.radius

    def sample(self, max_chord_error: float = 0.5) -> np.ndarray:
        """Points along the path; arcs are split so chords stay within the error."""
        r = self.radius
        step = 2 * math.acos(max(-1.0, 1 - max_chord_error / r)) if max_chord_error < 2 * r else math.pi / 2
        step = min(step, math.pi / 8)
        x, y, h = self.start.x, self.start.y, self.start.heading
        pts = [(x, y)]
        for kind, seg in zip(self.word, self.segments):
            if kind == "S":
                x, y = x + seg * r * math.cos(h), y + seg * r * math.sin(h)
                pts.append((x, y))
                continue
            sgn = 1.0 if kind == "L" else -1.0
            n = max(1, math.ceil(seg / step))
            cx, cy = x - sgn * r * math.sin(h), y + sgn * r * math.cos(h)
            for k in range(1, n + 1):
                hk = h + sgn * seg * k / n
                pts.append((cx + sgn * r * math.sin(hk), cy - sgn * r * math.cos(hk)))
            h = h + sgn * seg
            x, y = pts[-1]
        return np.array(pts)


def dubins_path(start: Pose, end: Pose, r_min: float) -> tuple[float, DubinsPath]:
    """Shortest path between two poses with turning radius ``r_min``."""
    global geometry_evaluations
    if r_min <= 0:
        raise GeometryError("turning radius must be positive")
    geometry_evaluations += 1
    x0, y0, h0 = float(start.x), float(start.y), float(start.heading)
    dx, dy = float(end.x) - x0, float(end.y) - y0
    dist = math.hypot(dx, dy)
    th = math.atan2(dy, dx) if dist > 0 else h0
    alpha, beta = _mod2pi_scalar(h0 - th), _mod2pi_scalar(float(end.heading) - th)
    words = _dubins_words(alpha, beta, dist / r_min, _ScalarOps)
    best, w = math.inf, 0
    for i, (t, p, q) in enumerate(words):
        total = t + p + q
        if math.isfinite(total) and total < best:
            best, w = total, i
    t, p, q = words[w]
    return best * r_min, DubinsPath(start, r_min, WORDS[w], (float(t), float(p), float(q)))


# -- turn-aware arc costs ------------------------------------------------

def _arc_geometry(graph: Graph, arc):
    e = graph.edges[arc[0]]
    if e.is_loop:
        raise GeometryError(f"edge {e.id} is a point feature; turn-aware routing needs line geometry")
    t, h = (e.head, e.tail) if arc[1] else (e.tail, e.head)
    p, q = graph.coords[t], graph.coords[h]
    length = math.hypot(q[0] - p[0], q[1] - p[1])
    if length == 0.0:
        raise GeometryError(f"edge {e.id} has zero length")
    return t, h, p, q, math.atan2(q[1] - p[1], q[0] - p[0]), length


def corner_maneuver(graph: Graph, a1, a2, params: RobotParams, smooth: bool = True):
    """Cheapest way from the end of ``a1`` into ``a2``.

    Returns ``(cost, maneuver, path)`` where ``path`` is a DubinsPath when a
    deadhead curve is used and ``None`` otherwise.
    """
    _, h1, _, q1, psi1, len1 = _arc_geometry(graph, a1)
    t2, _, p2, _, psi2, len2 = _arc_geometry(graph, a2)
    vd = params.v_deadhead
    r_min = vd / params.omega_max
    length, path = dubins_path(Pose(q1[0], q1[1], psi1), Pose(p2[0], p2[1], psi2), r_min)
    dub = TurnManeuver("dubins", r_min, vd, length / vd, 0.0, length / vd)
    if h1 != t2 or not smooth:
        return dub.penalty, dub, path
    theta = math.pi - abs(_wrap(psi2 - psi1))
    sm = smooth_turn(theta, params.v_service, params, len1 / 2, len2 / 2)
    if params.min_speed > 0 and sm.kind != "none" and sm.turn_speed < params.min_speed:
        return dub.penalty, dub, path
    if sm.penalty <= dub.penalty:
        return sm.penalty, sm, None
    return dub.penalty, dub, path


def turn_cost_between_arcs(a1, a2, graph: Graph, params: RobotParams, smooth: bool = True) -> float:
    """Time to get from the end of arc ``a1`` into arc ``a2``."""
    return corner_maneuver(graph, Arc(*a1), Arc(*a2), params, smooth)[0]


def depot_leg_cost(depot: int, arc, graph: Graph, params: RobotParams, inbound: bool = False) -> float:
    """Dubins time between the depot pose and the arc's entry (or exit) pose."""
    _, _, p, q, psi, _ = _arc_geometry(graph, Arc(*arc))
    home = Pose(*graph.coords[depot], params.depot_heading(depot))
    r_min = params.v_deadhead / params.omega_max
    if inbound:
        length, _ = dubins_path(Pose(q[0], q[1], psi), home, r_min)
    else:
        length, _ = dubins_path(home, Pose(p[0], p[1], psi), r_min)
    return length / params.v_deadhead


class TurnRoutingModel(RoutingModel):
    """Leg costs keyed by arc: every arc is its own start and end key."""

    kind = "turns"

    def __init__(self, graph: Graph, params: RobotParams, depots=None, smooth: bool = True):
        self.smooth = smooth
        super().__init__(graph, params, depots, matrices=False)

    def _build_legs(self, matrices):
        graph, params = self.graph, self.params
        m = self.n_required
        for eid in self.required:
            _arc_geometry(graph, Arc(eid, False))
        n_arcs = 2 * m
        self.matrices = None
        self.key_vertex = None
        self.start_key = np.arange(n_arcs)
        self.end_key = np.arange(n_arcs)
        P = graph.coords[self.arc_tail]
        H = graph.coords[self.arc_head]
        psi = np.arctan2(H[:, 1] - P[:, 1], H[:, 0] - P[:, 0])
        self.arc_heading = psi
        vd = params.v_deadhead
        r_min = vd / params.omega_max
        # exit pose of a1 (rows) to entry pose of a2 (columns)
        L, _ = dubins_lengths(H[:, None, 0], H[:, None, 1], psi[:, None],
                              P[None, :, 0], P[None, :, 1], psi[None, :], r_min)
        link = L / vd
        if self.smooth:
            lengths = np.hypot(H[:, 0] - P[:, 0], H[:, 1] - P[:, 1])
            for a1 in range(n_arcs):
                for a2 in np.flatnonzero(self.arc_tail == self.arc_head[a1]):
                    theta = math.pi - abs(_wrap(psi[a2] - psi[a1]))
                    sm = smooth_turn(theta, params.v_service, params, lengths[a1] / 2, lengths[a2] / 2)
                    if params.min_speed > 0 and sm.kind != "none" and sm.turn_speed < params.min_speed:
                        continue
                    link[a1, a2] = min(link[a1, a2], sm.penalty)
        self.link_cost = self.link_demand = link
        D = graph.coords[self.depots]
        hd = np.array([params.depot_heading(int(d)) for d in self.depots])
        out_len, _ = dubins_lengths(D[:, None, 0], D[:, None, 1], hd[:, None],
                                    P[None, :, 0], P[None, :, 1], psi[None, :], r_min)
        in_len, _ = dubins_lengths(H[None, :, 0], H[None, :, 1], psi[None, :],
                                   D[:, None, 0], D[:, None, 1], hd[:, None], r_min)
        self.out_cost = self.out_demand = out_len / vd
        self.in_cost = self.in_demand = in_len / vd

    # -- path expansion -------------------------------------------------
    def _dubins_step(self, start: Pose, end: Pose, verts) -> Step:
        r_min = self.params.v_deadhead / self.params.omega_max
        length, path = dubins_path(start, end, r_min)
        cost = length / self.params.v_deadhead
        return Step("deadhead", cost, cost, list(verts), maneuver="dubins",
                    geometry=list(map(tuple, path.sample().tolist())))

    def _entry(self, a):
        p = self.graph.coords[self.arc_tail[a]]
        return Pose(p[0], p[1], self.arc_heading[a])

    def _exit(self, a):
        q = self.graph.coords[self.arc_head[a]]
        return Pose(q[0], q[1], self.arc_heading[a])

    def _home(self, depot):
        c = self.graph.coords[depot]
        return Pose(c[0], c[1], self.params.depot_heading(depot))

    def out_steps(self, depot: int, a: int) -> list:
        cost = float(self.out_cost[self.depot_index[depot], a])
        step = self._dubins_step(self._home(depot), self._entry(a), [depot, int(self.arc_tail[a])])
        step.cost = step.demand = cost
        return [] if cost == 0.0 else [step]

    def in_steps(self, a: int, depot: int) -> list:
        cost = float(self.in_cost[self.depot_index[depot], a])
        step = self._dubins_step(self._exit(a), self._home(depot), [int(self.arc_head[a]), depot])
        step.cost = step.demand = cost
        return [] if cost == 0.0 else [step]

    def link_steps(self, a1: int, a2: int) -> list:
        cost = float(self.link_cost[a1, a2])
        _, man, path = corner_maneuver(self.graph, self.arc(a1), self.arc(a2), self.params, self.smooth)
        verts = [int(self.arc_head[a1]), int(self.arc_tail[a2])]
        if path is not None:
            step = Step("deadhead", cost, cost, verts, maneuver="dubins",
                        geometry=list(map(tuple, path.sample().tolist())))
            return [] if cost == 0.0 else [step]
        if man.kind == "none":
            return []
        corner = self.graph.coords[self.arc_head[a1]]
        h1, h2 = self.arc_heading[a1], self.arc_heading[a2]
        theta = math.pi - abs(_wrap(h2 - h1))
        pts = smooth_arc_points(corner, (math.cos(h1), math.sin(h1)), (math.cos(h2), math.sin(h2)),
                                man.radius, theta) if man.kind != "stop-turn" else np.array([corner, corner])
        return [Step("turn", cost, cost, verts[:1], maneuver=man.kind,
                     geometry=list(map(tuple, np.asarray(pts, dtype=float).tolist())))]


def solve_md_mem_turns(graph: Graph, params: RobotParams, depots=None, smooth: bool = True, *,
                       model: TurnRoutingModel | None = None) -> Solution:
    """MD-MEM with every leg priced by turn-aware costs.

    With ``smooth=False`` corners between adjacent arcs are flown as Dubins
    curves only.
    """
    if model is None:
        model = TurnRoutingModel(graph, params, depots, smooth)
    algo = "md-mem-turns" if model.smooth else "md-mem-dubins"
    return mem_state(model).run().extract_solution(algo)
