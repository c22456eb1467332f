"""Depot-anchored routes over required arcs, merging and savings.

Arcs of required edges are coded as ``2 * r + rev`` where ``r`` indexes
``model.required``; flipping the low bit reverses an arc.  A route's cost is

    (out_leg + in_leg) + inner + setup_cost

where ``inner`` covers service and the links between consecutive arcs.  The
same association order is used everywhere so cached costs and savings agree
exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cost_model import RobotParams
from .errors import InfeasibleEdge
from .graph import Arc, DeadheadMatrices, Graph, shortest_deadhead

# above this many endpoint keys the best-depot table is skipped (memory)
MAX_TABLE_KEYS = 6000


@dataclass(frozen=True)
class MergePermutation:
    """One of the eight ways to join routes p and q.

    ``code = 4 * order + 2 * reverse_p + reverse_q`` with order 0 for p then q.
    """

    code: int

    @property
    def q_first(self) -> bool:
        return bool(self.code >> 2)

    @property
    def reverse_p(self) -> bool:
        return bool((self.code >> 1) & 1)

    @property
    def reverse_q(self) -> bool:
        return bool(self.code & 1)

    def __repr__(self):
        order = "qp" if self.q_first else "pq"
        return f"MergePermutation({order}, p={'rev' if self.reverse_p else 'fwd'}, q={'rev' if self.reverse_q else 'fwd'})"


PERMUTATIONS = tuple(MergePermutation(c) for c in range(8))


@dataclass(frozen=True)
class Route:
    """Immutable route; ``start/end/inner_*`` hold (as-is, reversed) pairs."""

    id: int
    depot: int
    arcs: tuple
    cost: float
    demand: float
    start: tuple
    end: tuple
    inner_cost: tuple
    inner_demand: tuple

    def __len__(self):
        return len(self.arcs)


@dataclass(frozen=True)
class SavingsEntry:
    p: int
    q: int
    saving: float
    permutation: MergePermutation
    depot: int


@dataclass
class Step:
    mode: str  # "service", "deadhead" or "turn"
    cost: float
    demand: float
    vertices: list
    edge: int | None = None
    reverse: bool | None = None
    maneuver: str | None = None
    geometry: list = field(default_factory=list)


class _LegTable:
    __slots__ = ("cost", "demand", "depot", "min_demand")

    def __init__(self, cost, demand, depot, min_demand):
        self.cost, self.demand, self.depot, self.min_demand = cost, demand, depot, min_demand


class RoutingModel:
    """Leg costs between depots and required arcs for one instance.

    Endpoint keys are compressed vertex indices: a route is identified, for
    leg pricing, by the key where it starts and the key where it ends.
    ``link_cost[end_key, start_key]`` prices the deadhead between consecutive
    arcs; ``out_cost[d, key]`` / ``in_cost[d, key]`` price depot legs.
    """

    kind = "holonomic"

    def __init__(self, graph: Graph, params: RobotParams, depots=None, matrices: DeadheadMatrices | None = None):
        self.graph = graph
        self.params = params
        self.setup_cost = float(params.setup_cost)
        self.limit = params.capacity_limit
        self.required = tuple(graph.required)
        self.depots = np.array(sorted(set(graph.depots if depots is None else depots)), dtype=np.int64)
        if len(self.depots) == 0:
            raise ValueError("at least one depot is required")
        self.depot_index = {int(v): i for i, v in enumerate(self.depots)}
        m = len(self.required)
        svc_cost = np.empty(2 * m)
        svc_dem = np.empty(2 * m)
        tails = np.empty(2 * m, dtype=np.int64)
        heads = np.empty(2 * m, dtype=np.int64)
        for r, eid in enumerate(self.required):
            e = graph.edges[eid]
            svc_cost[2 * r], svc_cost[2 * r + 1] = e.service_cost
            svc_dem[2 * r], svc_dem[2 * r + 1] = e.service_demand
            tails[2 * r], heads[2 * r] = e.tail, e.head
            tails[2 * r + 1], heads[2 * r + 1] = e.head, e.tail
        self.svc_cost, self.svc_demand = svc_cost, svc_dem
        self.arc_tail, self.arc_head = tails, heads
        self._tables = {}
        self._build_legs(matrices)

    # -- construction -------------------------------------------------
    def _build_legs(self, matrices):
        graph = self.graph
        self.matrices = matrices if matrices is not None else shortest_deadhead(graph)
        keys = np.unique(np.concatenate([self.arc_tail, self.arc_head]))
        full = len(keys) == graph.n_vertices
        self.key_vertex = keys
        lookup = np.full(graph.n_vertices, -1, dtype=np.int64)
        lookup[keys] = np.arange(len(keys))
        self.start_key = lookup[self.arc_tail]
        self.end_key = lookup[self.arc_head]
        C, Dq = self.matrices.cost, self.matrices.demand
        same = Dq is C
        if full:
            self.link_cost = C
            self.link_demand = C if same else Dq
        else:
            ix = np.ix_(keys, keys)
            self.link_cost = C[ix]
            self.link_demand = self.link_cost if same else Dq[ix]
        self.out_cost = C[self.depots][:, keys]
        self.in_cost = np.ascontiguousarray(C[:, self.depots][keys].T)
        if same:
            self.out_demand, self.in_demand = self.out_cost, self.in_cost
        else:
            self.out_demand = Dq[self.depots][:, keys]
            self.in_demand = np.ascontiguousarray(Dq[:, self.depots][keys].T)

    @property
    def n_required(self) -> int:
        return len(self.required)

    @property
    def demand_is_cost(self) -> bool:
        return self.out_demand is self.out_cost and self.link_demand is self.link_cost

    def arc(self, code: int) -> Arc:
        return Arc(self.required[code >> 1], bool(code & 1))

    def arc_code(self, arc) -> int:
        return 2 * self.required.index(arc[0]) + int(bool(arc[1]))

    def link(self, a1: int, a2: int) -> tuple[float, float]:
        i, j = self.end_key[a1], self.start_key[a2]
        return float(self.link_cost[i, j]), float(self.link_demand[i, j])

    # -- best depot for a merged route --------------------------------
    def leg_table(self, dsel):
        key = tuple(int(d) for d in dsel)
        if key in self._tables:
            return self._tables[key]
        K = self.out_cost.shape[1]
        table = None
        if len(key) > 1 and K <= MAX_TABLE_KEYS:
            table = self._build_table(np.asarray(key))
        self._tables[key] = table
        return table

    def _build_table(self, dsel):
        K = self.out_cost.shape[1]
        cost = np.full((K, K), np.inf)
        dtype = np.int16 if len(self.depots) < 2 ** 15 else np.int64
        dep = np.zeros((K, K), dtype=dtype)
        same = self.demand_is_cost
        demand = cost if same else np.full((K, K), np.inf)
        min_dem = cost if same else np.full((K, K), np.inf)
        for d in dsel:
            cand = self.out_cost[d][:, None] + self.in_cost[d][None, :]
            better = cand < cost
            if same:
                np.copyto(cost, cand, where=better)
            else:
                candd = self.out_demand[d][:, None] + self.in_demand[d][None, :]
                np.copyto(cost, cand, where=better)
                np.copyto(demand, candd, where=better)
                np.minimum(min_dem, candd, out=min_dem)
            dep[better] = d
            del cand, better
        return _LegTable(cost, demand, dep, min_dem)

    def best_legs(self, dsel, a, b, inner_demand):
        """Cheapest depot legs for routes starting at key ``a`` and ending at
        ``b`` whose total demand fits; ties go to the lowest depot index.

        Returns ``(leg_cost, leg_demand, depot_index, feasible)`` arrays.
        """
        lim = self.limit
        n = len(a)
        if len(dsel) == 1:
            d = int(dsel[0])
            lc = self.out_cost[d, a] + self.in_cost[d, b]
            ld = lc if self.demand_is_cost else self.out_demand[d, a] + self.in_demand[d, b]
            return lc, ld, np.full(n, d, dtype=np.int64), ld + inner_demand <= lim
        table = self.leg_table(dsel)
        if table is None:
            return self._scan(np.asarray(dsel), a, b, inner_demand)
        lc = table.cost[a, b]
        ld = lc if table.demand is table.cost else table.demand[a, b]
        dep = table.depot[a, b].astype(np.int64)
        ok = ld + inner_demand <= lim
        if table.min_demand is not table.cost and not ok.all():
            retry = ~ok & (table.min_demand[a, b] + inner_demand <= lim)
            if retry.any():
                idx = np.flatnonzero(retry)
                slc, sld, sdep, sok = self._scan(np.asarray(dsel), a[idx], b[idx], inner_demand[idx])
                lc = lc.copy()
                ld = ld.copy()
                lc[idx], ld[idx], dep[idx], ok[idx] = slc, sld, sdep, sok
        return lc, ld, dep, ok

    def _scan(self, dsel, a, b, inner_demand):
        C = self.out_cost[dsel[:, None], a[None, :]] + self.in_cost[dsel[:, None], b[None, :]]
        if self.demand_is_cost:
            Dm = C.copy()
        else:
            Dm = self.out_demand[dsel[:, None], a[None, :]] + self.in_demand[dsel[:, None], b[None, :]]
        C[Dm + inner_demand[None, :] > self.limit] = np.inf
        j = np.argmin(C, axis=0)
        cols = np.arange(len(a))
        lc = C[j, cols]
        return lc, Dm[j, cols], dsel[j], np.isfinite(lc)

    # -- path expansion -----------------------------------------------
    def _deadhead(self, u: int, v: int) -> list:
        if u == v:
            return []
        mats = self.matrices
        verts = mats.path(u, v)
        return [Step("deadhead", float(mats.cost[u, v]), float(mats.demand[u, v]), verts,
                     geometry=[tuple(map(float, self.graph.coords[x])) for x in verts])]

    def out_steps(self, depot: int, a: int) -> list:
        return self._deadhead(depot, int(self.arc_tail[a]))

    def in_steps(self, a: int, depot: int) -> list:
        return self._deadhead(int(self.arc_head[a]), depot)

    def link_steps(self, a1: int, a2: int) -> list:
        return self._deadhead(int(self.arc_head[a1]), int(self.arc_tail[a2]))

    def service_step(self, a: int) -> Step:
        t, h = int(self.arc_tail[a]), int(self.arc_head[a])
        coords = self.graph.coords
        return Step("service", float(self.svc_cost[a]), float(self.svc_demand[a]), [t, h],
                    edge=self.required[a >> 1], reverse=bool(a & 1),
                    geometry=[tuple(map(float, coords[t])), tuple(map(float, coords[h]))])


def routing_model(graph: Graph, params: RobotParams, depots=None, matrices=None) -> RoutingModel:
    return RoutingModel(graph, params, depots, matrices)


# -- route construction ---------------------------------------------------

def _finish(model: RoutingModel, rid, d_idx, arcs, start, end, inner_cost, inner_demand) -> Route:
    s, e = start[0], end[0]
    leg = model.out_cost[d_idx, s] + model.in_cost[d_idx, e]
    legd = model.out_demand[d_idx, s] + model.in_demand[d_idx, e]
    cost = float((leg + inner_cost[0]) + model.setup_cost)
    demand = float(legd + inner_demand[0])
    return Route(rid, int(model.depots[d_idx]), tuple(arcs), cost, demand,
                 tuple(int(x) for x in start), tuple(int(x) for x in end),
                 (float(inner_cost[0]), float(inner_cost[1])), (float(inner_demand[0]), float(inner_demand[1])))


def arc_route(model: RoutingModel, arc: int, depot: int, rid: int = 0) -> Route:
    """Single-arc route servicing arc code ``arc`` from ``depot``."""
    d_idx = model.depot_index[int(depot)]
    rev = arc ^ 1
    return _finish(model, rid, d_idx, (arc,),
                   (model.start_key[arc], model.start_key[rev]), (model.end_key[arc], model.end_key[rev]),
                   (model.svc_cost[arc], model.svc_cost[rev]), (model.svc_demand[arc], model.svc_demand[rev]))


def init_route(model: RoutingModel, edge: int, depot: int, rid: int = 0) -> Route:
    """Cheaper feasible direction for required edge id ``edge``; ties keep forward."""
    r = model.required.index(edge)
    fwd = arc_route(model, 2 * r, depot, rid)
    rev = arc_route(model, 2 * r + 1, depot, rid)
    ok = [x for x in (fwd, rev) if x.demand <= model.limit]
    if not ok:
        raise InfeasibleEdge([edge])
    return min(ok, key=lambda x: x.cost)


def make_route(model: RoutingModel, arcs, depot: int, rid: int = 0) -> Route:
    """Route servicing ``arcs`` in the given order from ``depot``."""
    arcs = [int(a) for a in arcs]
    route = arc_route(model, arcs[0], depot, rid)
    for a in arcs[1:]:
        route = merge(model, route, arc_route(model, a, depot), 0, depot, rid)
    return route


def reverse(model: RoutingModel, route: Route) -> Route:
    arcs = tuple(a ^ 1 for a in reversed(route.arcs))
    d_idx = model.depot_index[route.depot]
    return _finish(model, route.id, d_idx, arcs, route.start[::-1], route.end[::-1],
                   route.inner_cost[::-1], route.inner_demand[::-1])


def merge(model: RoutingModel, rp: Route, rq: Route, perm, depot: int, rid: int = 0) -> Route:
    """Join ``rp`` and ``rq`` under ``perm`` and anchor the result at ``depot``."""
    perm = perm if isinstance(perm, MergePermutation) else MergePermutation(int(perm))
    first, rf, second, rs = (rq, perm.reverse_q, rp, perm.reverse_p) if perm.q_first \
        else (rp, perm.reverse_p, rq, perm.reverse_q)
    rf, rs = int(rf), int(rs)
    arcs_f = first.arcs if not rf else tuple(a ^ 1 for a in reversed(first.arcs))
    arcs_s = second.arcs if not rs else tuple(a ^ 1 for a in reversed(second.arcs))
    # forward orientation of the merged route
    i, j = first.end[rf], second.start[rs]
    ic = (first.inner_cost[rf] + model.link_cost[i, j]) + second.inner_cost[rs]
    idm = (first.inner_demand[rf] + model.link_demand[i, j]) + second.inner_demand[rs]
    # reversed orientation: reversed second, then reversed first
    i2, j2 = second.end[1 - rs], first.start[1 - rf]
    ic_r = (second.inner_cost[1 - rs] + model.link_cost[i2, j2]) + first.inner_cost[1 - rf]
    idm_r = (second.inner_demand[1 - rs] + model.link_demand[i2, j2]) + first.inner_demand[1 - rf]
    return _finish(model, rid, model.depot_index[int(depot)], arcs_f + arcs_s,
                   (first.start[rf], second.start[1 - rs]), (second.end[rs], first.end[1 - rf]),
                   (ic, ic_r), (idm, idm_r))


# -- vectorized savings ---------------------------------------------------

class RouteTable:
    """Column store of route endpoint data consumed by :func:`pair_savings`."""

    def __init__(self, capacity: int):
        self.start = np.zeros((2, capacity), dtype=np.int64)
        self.end = np.zeros((2, capacity), dtype=np.int64)
        self.inner_cost = np.zeros((2, capacity))
        self.inner_demand = np.zeros((2, capacity))
        self.cost = np.zeros(capacity)

    def put(self, slot: int, route: Route) -> None:
        self.start[:, slot] = route.start
        self.end[:, slot] = route.end
        self.inner_cost[:, slot] = route.inner_cost
        self.inner_demand[:, slot] = route.inner_demand
        self.cost[slot] = route.cost


_PERM_REV_P = np.array([(c >> 1) & 1 for c in range(8)])
_PERM_REV_Q = np.array([c & 1 for c in range(8)])


def pair_savings(model: RoutingModel, table: RouteTable, p: int, qs: np.ndarray, dsel):
    """Best merge of route slot ``p`` with each slot in ``qs``.

    ``p`` may also be an array of owner slots aligned with ``qs``.

    Scans all eight permutations and the depots in ``dsel``; returns
    ``(saving, perm_code, depot_index)`` arrays with ``-inf`` saving where no
    candidate is feasible with non-negative saving.  Ties keep the lowest
    permutation code, then the lowest depot.
    """
    n = len(qs)
    if n == 0:
        return np.full(0, -np.inf), np.zeros(0, dtype=np.int8), np.zeros(0, dtype=np.int64)
    lam = model.setup_cost
    lc_, ld_ = model.link_cost, model.link_demand
    p = np.broadcast_to(np.asarray(p), qs.shape)
    base = table.cost[p] + table.cost[qs]
    # rows are permutation codes: order * 4 + rev_p * 2 + rev_q
    rp, rq = _PERM_REV_P[:, None], _PERM_REV_Q[:, None]
    ps, pe = table.start[rp, p], table.end[rp, p]
    pic, pid = table.inner_cost[rp, p], table.inner_demand[rp, p]
    qstart, qend = table.start[rq, qs], table.end[rq, qs]
    qic, qid = table.inner_cost[rq, qs], table.inner_demand[rq, qs]
    f, r = slice(0, 4), slice(4, 8)
    a = np.concatenate([ps[f], qstart[r]])
    b = np.concatenate([qend[f], pe[r]])
    ic = np.concatenate([(pic[f] + lc_[pe[f], qstart[f]]) + qic[f], (qic[r] + lc_[qend[r], ps[r]]) + pic[r]])
    idm = np.concatenate([(pid[f] + ld_[pe[f], qstart[f]]) + qid[f], (qid[r] + ld_[qend[r], ps[r]]) + pid[r]])
    leg, _, dep, ok = model.best_legs(dsel, a.ravel(), b.ravel(), idm.ravel())
    sav = base - ((leg.reshape(8, n) + ic) + lam)
    sav = np.where(ok.reshape(8, n) & (sav >= 0), sav, -np.inf)
    # argmax keeps the first, i.e. lowest, permutation code among ties
    code = np.argmax(sav, axis=0)
    cols = np.arange(n)
    best = sav[code, cols]
    found = np.isfinite(best)
    best_perm = np.where(found, code, 0).astype(np.int8)
    best_dep = np.where(found, dep.reshape(8, n)[code, cols], 0).astype(np.int64)
    return best, best_perm, best_dep


def best_merge(model: RoutingModel, rp: Route, rq: Route, depots=None) -> SavingsEntry | None:
    """Highest-saving feasible merge of two routes over all permutations and depots."""
    dsel = np.arange(len(model.depots)) if depots is None else \
        np.array(sorted(model.depot_index[int(v)] for v in depots))
    table = RouteTable(2)
    table.put(0, rp)
    table.put(1, rq)
    sav, perm, dep = pair_savings(model, table, 0, np.array([1]), dsel)
    if not np.isfinite(sav[0]):
        return None
    return SavingsEntry(rp.id, rq.id, float(sav[0]), PERMUTATIONS[int(perm[0])], int(model.depots[dep[0]]))


def route_cost(model: RoutingModel, depot: int, arcs) -> tuple[float, float]:
    """Recompute cost and demand of an arc sequence from leg lookups."""
    d = model.depot_index[int(depot)]
    arcs = list(arcs)
    c = model.out_cost[d, model.start_key[arcs[0]]] + model.in_cost[d, model.end_key[arcs[-1]]]
    q = model.out_demand[d, model.start_key[arcs[0]]] + model.in_demand[d, model.end_key[arcs[-1]]]
    for i, a in enumerate(arcs):
        c += model.svc_cost[a]
        q += model.svc_demand[a]
        if i:
            lc, ld = model.link(arcs[i - 1], a)
            c += lc
            q += ld
    return float(c + model.setup_cost), float(q)


def expand_path(model: RoutingModel, route: Route) -> list:
    """Concrete itinerary: depot leg, service arcs with links, return leg."""
    arcs = route.arcs
    steps = list(model.out_steps(route.depot, arcs[0]))
    for i, a in enumerate(arcs):
        if i:
            steps.extend(model.link_steps(arcs[i - 1], a))
        steps.append(model.service_step(a))
    steps.extend(model.in_steps(arcs[-1], route.depot))
    return steps


@dataclass
class Solution:
    routes: list
    steps: list
    setup_cost: float
    algorithm: str = ""
    depots: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def total_cost(self) -> float:
        return math.fsum(r.cost for r in self.routes)

    @property
    def total_demand(self) -> float:
        return math.fsum(r.demand for r in self.routes)

    @property
    def num_routes(self) -> int:
        return len(self.routes)

    def service_counts(self, model: RoutingModel) -> dict:
        counts = {eid: 0 for eid in model.required}
        for r in self.routes:
            for a in r.arcs:
                counts[model.required[a >> 1]] += 1
        return counts


def build_solution(model: RoutingModel, routes, algorithm: str = "", meta=None) -> Solution:
    routes = sorted(routes, key=lambda r: r.id)
    return Solution(routes=routes, steps=[expand_path(model, r) for r in routes],
                    setup_cost=model.setup_cost, algorithm=algorithm,
                    depots=tuple(int(d) for d in model.depots), meta=dict(meta or {}))
