"""Multi-depot MEM, depot placement helpers and the cluster-first baseline."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .cost_model import RobotParams
from .errors import KTooLarge
from .graph import Graph, shortest_deadhead
from .mem import SolverState, initial_routes, mem_state
from .routes import RoutingModel, Solution, build_solution


def _model(graph, params, depots, model):
    if model is not None:
        return model
    return RoutingModel(graph, params, depots)


def md_initialize(graph: Graph, params: RobotParams, depots=None, *, model: RoutingModel | None = None) -> list:
    """One route per required edge at its cheapest feasible depot and direction."""
    return initial_routes(_model(graph, params, depots, model))


def solve_md_mem(graph: Graph, params: RobotParams, depots=None, *, model: RoutingModel | None = None) -> Solution:
    """MEM where every merge may re-anchor the merged route at any depot."""
    model = _model(graph, params, depots, model)
    return mem_state(model).run().extract_solution("md-mem")


def suggest_depot_count(graph: Graph, capacity: float) -> int:
    """``1 + ceil(sum of both service demands / 2Q)``; 1 with nothing to service."""
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    req = graph.required
    if not req:
        return 1
    total = math.fsum(sum(graph.edges[e].service_demand) for e in req)
    return 1 + math.ceil(total / (2.0 * capacity))


def _pam(dist: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100) -> np.ndarray:
    n = len(dist)
    medoids = np.sort(rng.choice(n, size=k, replace=False))
    for _ in range(max_iter):
        dm = dist[:, medoids]
        order = np.argsort(dm, axis=1, kind="stable")
        near = order[:, 0]
        first = dm[np.arange(n), near]
        second = dm[np.arange(n), order[:, 1]] if k > 1 else np.full(n, np.inf)
        current = first.sum()
        best_delta, best_swap = 0.0, None
        is_med = np.zeros(n, dtype=bool)
        is_med[medoids] = True
        cands = np.flatnonzero(~is_med)
        if len(cands) == 0:
            break
        dh = dist[:, cands]  # (n, |cands|)
        for i in range(k):
            keep = np.where(near == i, second, first)
            total = np.minimum(dh, keep[:, None]).sum(axis=0) - current
            j = int(np.argmin(total))
            if total[j] < best_delta - 1e-12 * max(1.0, abs(current)):
                best_delta, best_swap = total[j], (i, cands[j])
        if best_swap is None:
            break
        medoids[best_swap[0]] = best_swap[1]
        medoids = np.sort(medoids)
    return medoids


def k_medoids_depots(graph: Graph, k: int, seed: int = 0, matrices=None) -> list:
    """Pick ``k`` depots among required-edge endpoints by PAM swaps.

    Distances are symmetrized deadhead costs.  The result is sorted and
    fully determined by ``seed``.
    """
    req = graph.required
    if req:
        cands = np.unique([v for e in req for v in (graph.edges[e].tail, graph.edges[e].head)])
    else:
        cands = np.arange(graph.n_vertices)
    if not 1 <= k <= len(cands):
        raise KTooLarge(f"k={k} must lie in [1, {len(cands)}]")
    if k == len(cands):
        return [int(v) for v in cands]
    if matrices is None:
        matrices = shortest_deadhead(graph)
    C = matrices.cost[np.ix_(cands, cands)]
    dist = (C + C.T) / 2.0
    medoids = _pam(dist, k, np.random.default_rng(seed))
    return sorted(int(cands[i]) for i in medoids)


def nearest_depot_partition(model: RoutingModel) -> dict:
    """Required indices per depot index, by symmetric deadhead cost to either endpoint."""
    C = model.matrices.cost
    dep = model.depots
    S = (C[dep, :] + C[:, dep].T) / 2.0
    tails = model.arc_tail[0::2]
    heads = model.arc_head[0::2]
    dist = np.minimum(S[:, tails], S[:, heads])  # (nd, m)
    owner = np.argmin(dist, axis=0)
    return {d: np.flatnonzero(owner == d) for d in range(len(dep))}


def cluster_first_baseline(graph: Graph, params: RobotParams, depots=None, *, model: RoutingModel | None = None) -> Solution:
    """Assign each edge to its nearest depot, then run MEM per depot."""
    model = _model(graph, params, depots, model)
    routes = []
    for d, subset in nearest_depot_partition(model).items():
        if len(subset) == 0:
            continue
        state = SolverState(model, initial_routes(model, [d], subset), [d]).run()
        routes.extend(state.live_routes)
    routes = [replace(r, id=i) for i, r in enumerate(routes)]
    return build_solution(model, routes, "cluster-baseline")
