"""Instance graph, all-pairs deadhead paths and capacity validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .cost_model import RobotParams, WindModel, populate_costs, travel_time_matrix
from .errors import DisconnectedGraph, GraphError, MissingServiceValues, NegativeCost, UnreachablePair

EXPLICIT = "explicit"
COMPLETE = "complete"
MODES = (EXPLICIT, COMPLETE)


@dataclass(frozen=True)
class Edge:
    """An undirected edge with per-direction values stored as ``(fwd, rev)``.

    Forward is tail to head.  Service values exist only on required edges.
    """

    id: int
    tail: int
    head: int
    required: bool = False
    service_cost: tuple | None = None
    service_demand: tuple | None = None
    deadhead_cost: tuple | None = None
    deadhead_demand: tuple | None = None

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


class Arc(tuple):
    """``(edge, reverse)``; forward arcs run tail to head."""

    __slots__ = ()

    def __new__(cls, edge: int, reverse: bool = False):
        return tuple.__new__(cls, (int(edge), bool(reverse)))

    edge = property(lambda self: self[0])
    reverse = property(lambda self: self[1])

    def flipped(self) -> "Arc":
        return Arc(self[0], not self[1])

    def __repr__(self):
        return f"Arc({self[0]}, {'rev' if self[1] else 'fwd'})"


@dataclass(frozen=True, eq=False)
class Graph:
    coords: np.ndarray
    edges: tuple
    depots: tuple
    mode: str = EXPLICIT
    fly_speed: float | None = None  # deadhead speed for synthesized complete-mode legs
    wind: WindModel = field(default_factory=WindModel)

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @cached_property
    def required(self) -> tuple:
        """Ids of required edges in ascending order."""
        return tuple(e.id for e in self.edges if e.required)

    def edge(self, eid: int) -> Edge:
        return self.edges[eid]

    def arc_ends(self, arc) -> tuple[int, int]:
        e = self.edges[arc[0]]
        return (e.head, e.tail) if arc[1] else (e.tail, e.head)


def _pair(value, what, eid):
    if value is None:
        return None
    fwd, rev = (float(value[0]), float(value[1]))
    for v in (fwd, rev):
        if not math.isfinite(v):
            raise NegativeCost(f"edge {eid}: {what} must be finite, got {v}")
        if v < 0:
            raise NegativeCost(f"edge {eid}: {what} must be non-negative, got {v}")
    return (fwd, rev)


def check_graph(graph: Graph) -> Graph:
    """Validate costs, required values and connectivity; return the graph."""
    n = graph.n_vertices
    if graph.mode not in MODES:
        raise GraphError(f"unknown mode {graph.mode!r}")
    if not np.all(np.isfinite(graph.coords)):
        raise GraphError("vertex coordinates must be finite")
    if not graph.depots:
        raise GraphError("at least one depot is required")
    for d in graph.depots:
        if not 0 <= d < n:
            raise GraphError(f"depot {d} is not a vertex")
    for i, e in enumerate(graph.edges):
        if e.id != i:
            raise GraphError("edge ids must be dense and ordered")
        if not (0 <= e.tail < n and 0 <= e.head < n):
            raise GraphError(f"edge {e.id} references a missing vertex")
        for name in ("service_cost", "service_demand", "deadhead_cost", "deadhead_demand"):
            _pair(getattr(e, name), name.replace("_", " "), e.id)
        if e.required and (e.service_cost is None or e.service_demand is None):
            raise MissingServiceValues(f"required edge {e.id} lacks service cost/demand")
        if e.is_loop:
            if not e.required:
                raise GraphError(f"self-loop {e.id} must be a required point feature")
            for dh in (e.deadhead_cost, e.deadhead_demand):
                if dh is not None and any(dh):
                    raise GraphError(f"self-loop {e.id} must have zero deadhead cost and demand")
        elif graph.mode == EXPLICIT and (e.deadhead_cost is None or e.deadhead_demand is None):
            raise GraphError(f"edge {e.id} lacks deadhead cost/demand")
    if graph.mode == EXPLICIT and n > 1:
        rows = [e.tail for e in graph.edges]
        cols = [e.head for e in graph.edges]
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise DisconnectedGraph(f"graph has {ncomp} connected components")
    if graph.mode == COMPLETE and graph.fly_speed is not None and graph.fly_speed <= 0:
        raise GraphError("fly speed must be positive")
    return graph


def _opt_pair(d, key):
    fk, rk = key + "_fwd", key + "_rev"
    if fk in d or rk in d:
        if fk not in d or rk not in d:
            raise MissingServiceValues(f"edge {d.get('id')}: {key} needs both directions")
        return (float(d[fk]), float(d[rk]))
    return None


def build_graph(doc: dict, params: RobotParams | None = None, wind: WindModel | None = None) -> Graph:
    """Build and validate a graph from an instance mapping.

    ``doc`` uses the instance-file layout (``vertices``, ``edges``,
    ``depots``, ``mode``).  When ``params`` is given, missing costs are
    derived from geometry; explicit values always win.
    """
    verts = sorted(doc["vertices"], key=lambda v: v["id"])
    if [v["id"] for v in verts] != list(range(len(verts))):
        raise GraphError("vertex ids must be unique and dense in [0, |V|)")
    coords = np.array([[float(v["x"]), float(v["y"])] for v in verts], dtype=float).reshape(-1, 2)
    raw_edges = sorted(doc.get("edges", []), key=lambda e: e["id"])
    if [e["id"] for e in raw_edges] != list(range(len(raw_edges))):
        raise GraphError("edge ids must be unique and dense in [0, |E|)")
    edges = []
    for d in raw_edges:
        tail, head = int(d["tail"]), int(d["head"])
        dh_cost, dh_dem = _opt_pair(d, "deadhead_cost"), _opt_pair(d, "deadhead_demand")
        if tail == head:
            dh_cost = dh_cost or (0.0, 0.0)
            dh_dem = dh_dem or (0.0, 0.0)
        edges.append(Edge(
            id=int(d["id"]), tail=tail, head=head, required=bool(d.get("required", False)),
            service_cost=_opt_pair(d, "service_cost"), service_demand=_opt_pair(d, "service_demand"),
            deadhead_cost=dh_cost, deadhead_demand=dh_dem,
        ))
    for e in edges:
        for name in ("service_cost", "service_demand", "deadhead_cost", "deadhead_demand"):
            _pair(getattr(e, name), name.replace("_", " "), e.id)
    graph = Graph(coords=coords, edges=tuple(edges), depots=tuple(int(x) for x in doc["depots"]),
                  mode=doc.get("mode", EXPLICIT), wind=wind or WindModel())
    if params is not None:
        graph = populate_costs(graph, params, wind or WindModel())
    return check_graph(graph)


def add_point_features(graph: Graph, points, service_cost: float, service_demand: float) -> Graph:
    """Append one vertex and one required self-loop per point feature."""
    if service_cost < 0 or service_demand < 0:
        raise NegativeCost("point feature cost/demand must be non-negative")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) == 0:
        return graph
    n0, e0 = graph.n_vertices, len(graph.edges)
    loops = tuple(
        Edge(id=e0 + i, tail=n0 + i, head=n0 + i, required=True,
             service_cost=(float(service_cost),) * 2, service_demand=(float(service_demand),) * 2,
             deadhead_cost=(0.0, 0.0), deadhead_demand=(0.0, 0.0))
        for i in range(len(points))
    )
    g = replace(graph, coords=np.vstack([graph.coords, points]), edges=graph.edges + loops)
    if g.mode == EXPLICIT:
        # a fresh vertex needs deadhead access; callers link it with explicit edges
        return g
    return check_graph(g)


@dataclass(frozen=True, eq=False)
class DeadheadMatrices:
    """All-pairs minimum deadhead cost, the demand along those paths, and
    ``next_hop`` for path reconstruction (``None`` when every leg is direct)."""

    cost: np.ndarray
    demand: np.ndarray
    next_hop: np.ndarray | None = None
    hop_edge: dict = field(default_factory=dict)  # (u, v) -> Arc used for a direct hop

    def path(self, u: int, v: int) -> list[int]:
        if u == v:
            return [u]
        if self.next_hop is None:
            return [u, v]
        out = [u]
        while u != v:
            u = int(self.next_hop[u, v])
            if u < 0:
                raise UnreachablePair(f"no path to {v}")
            out.append(u)
        return out


def floyd_warshall(n: int, arcs):
    """Dense Floyd-Warshall over ``(u, v, cost, demand, tag)`` arcs.

    Parallel arcs keep the cheapest, first listed on ties; intermediate
    vertices are relaxed in ascending order and only strict improvements
    replace a path.
    """
    cost = np.full((n, n), np.inf)
    demand = np.full((n, n), np.inf)
    nxt = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(cost, 0.0)
    np.fill_diagonal(demand, 0.0)
    np.fill_diagonal(nxt, np.arange(n))
    tags = {}
    for u, v, c, q, tag in arcs:
        if u != v and c < cost[u, v]:
            cost[u, v], demand[u, v], nxt[u, v] = c, q, v
            tags[(u, v)] = tag
    for k in range(n):
        cand = cost[:, k, None] + cost[None, k, :]
        better = cand < cost
        if better.any():
            rows, cols = np.nonzero(better)
            cost[rows, cols] = cand[rows, cols]
            demand[rows, cols] = demand[rows, k] + demand[k, cols]
            nxt[rows, cols] = nxt[rows, k]
    return cost, demand, nxt, tags


def shortest_deadhead(graph: Graph) -> DeadheadMatrices:
    if graph.mode == COMPLETE:
        if graph.fly_speed is None:
            raise GraphError("complete-fly graphs need a deadhead speed (populate costs first)")
        cost = travel_time_matrix(graph.coords, graph.coords, graph.fly_speed, graph.wind)
        np.fill_diagonal(cost, 0.0)
        return DeadheadMatrices(cost=cost, demand=cost)
    arcs = []
    for e in graph.edges:
        if e.is_loop:
            continue
        arcs.append((e.tail, e.head, e.deadhead_cost[0], e.deadhead_demand[0], Arc(e.id, False)))
        arcs.append((e.head, e.tail, e.deadhead_cost[1], e.deadhead_demand[1], Arc(e.id, True)))
    cost, demand, nxt, tags = floyd_warshall(graph.n_vertices, arcs)
    if not np.all(np.isfinite(cost)):
        u, v = np.argwhere(~np.isfinite(cost))[0]
        raise UnreachablePair(f"no deadhead path from {u} to {v}")
    return DeadheadMatrices(cost=cost, demand=demand, next_hop=nxt, hop_edge=tags)


@dataclass
class ValidationReport:
    infeasible_edges: list
    min_demand: dict  # required edge id -> smallest single-edge route demand

    @property
    def feasible(self) -> bool:
        return not self.infeasible_edges


def validate_instance(graph: Graph, params: RobotParams, matrices: DeadheadMatrices | None = None,
                      depots=None) -> ValidationReport:
    """List required edges that no single-edge route can service within Q."""
    if matrices is None:
        matrices = shortest_deadhead(graph)
    depots = list(graph.depots if depots is None else depots)
    dq = matrices.demand
    bad, mins = [], {}
    for eid in graph.required:
        e = graph.edges[eid]
        i, j = e.tail, e.head
        best = math.inf
        for v in depots:
            best = min(best,
                       dq[v, i] + e.service_demand[0] + dq[j, v],
                       dq[v, j] + e.service_demand[1] + dq[i, v])
        mins[eid] = float(best)
        if not best <= params.capacity_limit:
            bad.append(eid)
    return ValidationReport(bad, mins)
