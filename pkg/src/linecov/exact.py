"""Exact references: exhaustive search for tiny instances and an LP model writer."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .cost_model import RobotParams
from .errors import InfeasibleInstance, TooLarge, TooManyVariables
from .graph import COMPLETE, Graph, shortest_deadhead
from .routes import RoutingModel, Solution, build_solution, make_route


@dataclass(frozen=True)
class OracleLimits:
    max_required_edges: int = 5
    max_vertices: int = 12


def _best_single_routes(model: RoutingModel):
    """For every non-empty subset of required indices, the cheapest feasible
    single route: ``{mask: (cost, depot_index, arcs)}``."""
    m = model.n_required
    lam, lim = model.setup_cost, model.limit
    best = {}
    for mask in range(1, 1 << m):
        members = [r for r in range(m) if mask >> r & 1]
        top = (math.inf, -1, None)
        for order in itertools.permutations(members):
            for dirs in range(1 << len(order)):
                arcs = [2 * r + (dirs >> i & 1) for i, r in enumerate(order)]
                ic = iq = 0.0
                for i, a in enumerate(arcs):
                    ic += model.svc_cost[a]
                    iq += model.svc_demand[a]
                    if i:
                        lc, lq = model.link(arcs[i - 1], a)
                        ic += lc
                        iq += lq
                s, e = model.start_key[arcs[0]], model.end_key[arcs[-1]]
                cost = model.out_cost[:, s] + model.in_cost[:, e] + ic + lam
                dem = model.out_demand[:, s] + model.in_demand[:, e] + iq
                cost = np.where(dem <= lim, cost, np.inf)
                d = int(np.argmin(cost))
                if cost[d] < top[0]:
                    top = (float(cost[d]), d, tuple(arcs))
        best[mask] = top
    return best


def brute_force(graph: Graph, params: RobotParams, depots=None, turn_aware: bool = False, *,
                limits: OracleLimits = OracleLimits(), smooth: bool = True, model=None) -> Solution:
    """Optimal solution by enumerating partitions, orders, directions and depots."""
    m = len(graph.required)
    if m > limits.max_required_edges or graph.n_vertices > limits.max_vertices:
        raise TooLarge(f"oracle limited to {limits.max_required_edges} required edges and "
                       f"{limits.max_vertices} vertices (got {m}, {graph.n_vertices})")
    if model is None:
        if turn_aware:
            from .turns import TurnRoutingModel
            model = TurnRoutingModel(graph, params, depots, smooth)
        else:
            model = RoutingModel(graph, params, depots)
    if m == 0:
        return build_solution(model, [], "oracle")
    single = _best_single_routes(model)
    full = (1 << m) - 1
    value = {0: (0.0, ())}
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        top = (math.inf, ())
        sub = rest
        while True:
            part = sub | low
            c = single[part][0] + value[mask ^ part][0]
            if c < top[0]:
                top = (c, (part,) + value[mask ^ part][1])
            if sub == 0:
                break
            sub = (sub - 1) & rest
        value[mask] = top
    total, parts = value[full]
    if not math.isfinite(total):
        raise InfeasibleInstance(list(graph.required), "no feasible partition into routes")
    routes = []
    for i, part in enumerate(sorted(parts, key=lambda p: single[p][2])):
        _, d, arcs = single[part]
        routes.append(make_route(model, arcs, int(model.depots[d]), i))
    return build_solution(model, routes, "oracle")


# -- LP export -----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _expr(terms) -> str:
    """``[(coef, name)]`` to LP text with line breaks every few terms."""
    out = []
    for i, (c, name) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = name if mag == 1 else f"{_fmt(mag)} {name}"
        if i == 0:
            out.append(("- " if c < 0 else "") + body)
        else:
            out.append(f"{sign} {body}")
    lines, line = [], []
    for i, tok in enumerate(out):
        line.append(tok)
        if len(line) == 8 and i != len(out) - 1:
            lines.append(" ".join(line))
            line = []
    lines.append(" ".join(line))
    return "\n   ".join(lines)


def _lp_edges(graph: Graph):
    """``(id, tail, head, required, svc_cost, svc_dem, dh_cost, dh_dem)`` rows.

    Complete-fly graphs get one extra deadhead-only edge per vertex pair.
    """
    rows = []
    for e in graph.edges:
        dc = e.deadhead_cost if e.deadhead_cost is not None else (0.0, 0.0)
        dq = e.deadhead_demand if e.deadhead_demand is not None else dc
        rows.append((e.id, e.tail, e.head, e.required, e.service_cost, e.service_demand, dc, dq))
    if graph.mode == COMPLETE:
        mats = shortest_deadhead(graph)
        nid = len(rows)
        n = graph.n_vertices
        for u in range(n):
            for v in range(u + 1, n):
                rows.append((nid, u, v, False, None, None, (mats.cost[u, v], mats.cost[v, u]),
                             (mats.demand[u, v], mats.demand[v, u])))
                nid += 1
    return rows


def export_ilp_lp(graph: Graph, params: RobotParams, depot: int | None = None, K: int | None = None,
                  max_variables: int = 2_000_000) -> str:
    """Single-depot line coverage ILP in CPLEX LP text.

    Variables are ``s_k{k}_e{e}_{f|r}`` (service, binary), ``d_...`` (deadhead
    count) and ``z_...`` (flow).  The route setup cost is not part of the model.
    ``K`` defaults to the route count of a MEM run.
    """
    depot = graph.depots[0] if depot is None else int(depot)
    if K is None:
        from .mem import solve_mem
        K = max(1, solve_mem(graph, params, depot).num_routes)
    if K < 1:
        raise ValueError("K must be at least 1")
    rows = _lp_edges(graph)
    nE = len(rows)
    req = [r for r in rows if r[3]]
    nvar = K * (2 * len(req) + 4 * nE)
    if nvar > max_variables:
        raise TooManyVariables(f"{nvar} variables exceed the cap of {max_variables}")
    n = graph.n_vertices
    Q = params.capacity
    bigM = nE

    def name(kind, k, eid, rev):
        return f"{kind}_k{k}_e{eid}_{'r' if rev else 'f'}"

    # arcs as (eid, rev, tail, head)
    arcs = []
    for eid, t, h, *_ in rows:
        arcs.append((eid, False, t, h))
        arcs.append((eid, True, h, t))
    required = {r[0]: r for r in req}
    lines = ["\\ line coverage model", "Minimize"]
    obj = []
    for k in range(K):
        for eid, t, h, isreq, sc, sq, dc, dq in rows:
            if isreq:
                for rev in (0, 1):
                    if sc[rev] != 0:
                        obj.append((sc[rev], name("s", k, eid, rev)))
            for rev in (0, 1):
                if dc[rev] != 0:
                    obj.append((dc[rev], name("d", k, eid, rev)))
    lines.append(" obj: " + (_expr(obj) if obj else "0 " + name("d", 0, rows[0][0], 0)))
    lines.append("Subject To")
    cons = []
    for eid in required:
        terms = [(1, name("s", k, eid, rev)) for k in range(K) for rev in (0, 1)]
        cons.append((f"conce_{eid}", terms, "=", 1))
    for k in range(K):
        s_all = [(1, name("s", k, eid, rev)) for eid in required for rev in (0, 1)]
        if math.isfinite(Q):
            terms = []
            for eid, t, h, isreq, sc, sq, dc, dq in rows:
                if isreq:
                    terms += [(sq[rev], name("s", k, eid, rev)) for rev in (0, 1) if sq[rev] != 0]
                terms += [(dq[rev], name("d", k, eid, rev)) for rev in (0, 1) if dq[rev] != 0]
            if terms:
                cons.append((f"ccap_{k}_0", terms, "<=", Q))
        # flow released at the depot equals the number of serviced arcs
        terms = [(1, name("z", k, eid, rev)) for eid, rev, t, h in arcs if t == depot]
        terms += [(-1, nm) for _, nm in s_all]
        cons.append((f"cfdep_{k}_0", terms, "=", 0))
        for v in range(n):
            if v == depot:
                continue
            terms = [(1, name("z", k, eid, rev)) for eid, rev, t, h in arcs if h == v]
            terms += [(-1, name("z", k, eid, rev)) for eid, rev, t, h in arcs if t == v]
            terms += [(-1, name("s", k, eid, rev)) for eid, rev, t, h in arcs if h == v and eid in required]
            terms = _combine(terms)
            if terms:
                cons.append((f"cfabs_{k}_{v}", terms, "=", 0))
        for eid, rev, t, h in arcs:
            idx = 2 * eid + int(rev)
            z = name("z", k, eid, rev)
            cons.append((f"ccap2_{k}_{idx}", [(1, z)] + [(-1, nm) for _, nm in s_all], "<=", 0))
            if eid in required:
                cons.append((f"ccap1_{k}_{idx}", [(1, z), (-bigM, name("s", k, eid, rev)),
                                                   (-bigM, name("d", k, eid, rev))], "<=", 0))
            else:
                cons.append((f"ccap3_{k}_{idx}", [(1, z), (-bigM, name("d", k, eid, rev))], "<=", 0))
        for v in range(n):
            terms = [(1, name("s", k, eid, rev)) for eid, rev, t, h in arcs if h == v and eid in required]
            terms += [(1, name("d", k, eid, rev)) for eid, rev, t, h in arcs if h == v]
            terms += [(-1, name("s", k, eid, rev)) for eid, rev, t, h in arcs if t == v and eid in required]
            terms += [(-1, name("d", k, eid, rev)) for eid, rev, t, h in arcs if t == v]
            terms = _combine(terms)
            if terms:
                cons.append((f"csym_{k}_{v}", terms, "=", 0))
    for cname, terms, sense, rhs in cons:
        lines.append(f" {cname}: {_expr(terms)} {sense} {_fmt(rhs)}")
    lines.append("Generals")
    gens = [name(kind, k, eid, rev) for k in range(K) for kind in ("d", "z")
            for eid, *_ in rows for rev in (0, 1)]
    lines += [" " + " ".join(gens[i:i + 8]) for i in range(0, len(gens), 8)]
    lines.append("Binaries")
    bins = [name("s", k, eid, rev) for k in range(K) for eid in required for rev in (0, 1)]
    lines += [" " + " ".join(bins[i:i + 8]) for i in range(0, len(bins), 8)]
    lines.append("End")
    return "\n".join(lines) + "\n"


def _combine(terms):
    """Merge repeated variables (self-loops enter and leave the same vertex)."""
    acc = {}
    for c, nm in terms:
        acc[nm] = acc.get(nm, 0) + c
    return [(c, nm) for nm, c in acc.items() if c != 0]
