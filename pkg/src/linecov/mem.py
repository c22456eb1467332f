"""Merge-Embed-Merge: greedy savings merging with a lazily pruned max-heap."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .cost_model import RobotParams
from .errors import InfeasibleInstance
from .graph import Graph
from .routes import (PERMUTATIONS, Route, RouteTable, RoutingModel, SavingsEntry, Solution, arc_route,
                     build_solution, merge, pair_savings)


@dataclass(frozen=True)
class MergeReport:
    entry: SavingsEntry
    route: Route


class _Batch:
    """Savings of one owner route against its partners, best first."""

    __slots__ = ("partner", "saving", "perm", "depot")

    def __init__(self, partner, saving, perm, depot):
        self.partner, self.saving, self.perm, self.depot = partner, saving, perm, depot


class SolverState:
    """Routes, liveness flags and the savings heap of one MEM run.

    Route ids double as slots in the column store.  The heap holds only the
    head of each owner's batch keyed ``(-saving, lo id, hi id)``; a batch is
    abandoned as soon as its owner dies, and entries with a dead partner are
    skipped when their batch advances.
    """

    def __init__(self, model: RoutingModel, routes, depot_indices=None):
        self.model = model
        self.dsel = np.arange(len(model.depots)) if depot_indices is None else np.asarray(depot_indices)
        m = len(routes)
        self.routes: list[Route] = []
        self.table = RouteTable(max(2 * m, 1))
        self.alive = np.zeros(max(2 * m, 1), dtype=bool)
        self.heap = []
        self.batches: dict[int, _Batch] = {}
        self.inserted = 0
        self.merges = 0
        for r in routes:
            self._add(r)
        self._fill_initial(m)

    @property
    def next_id(self) -> int:
        return len(self.routes)

    def _add(self, route: Route) -> None:
        if route.id != len(self.routes):
            raise ValueError("route ids must be consecutive")
        self.routes.append(route)
        self.table.put(route.id, route)
        self.alive[route.id] = True

    def _fill_initial(self, m: int, chunk: int = 1 << 20) -> None:
        # savings of every pair p < q, evaluated in blocks of whole owners
        p0 = 0
        while p0 < m - 1:
            p1, size = p0, 0
            while p1 < m - 1 and (size == 0 or size + m - 1 - p1 <= chunk):
                size += m - 1 - p1
                p1 += 1
            owners = np.repeat(np.arange(p0, p1), np.arange(m - 1 - p0, m - 1 - p1, -1))
            starts = np.concatenate(([0], np.cumsum(np.arange(m - 1 - p0, m - 1 - p1, -1))))
            partners = np.arange(len(owners)) - np.repeat(starts[:-1], np.diff(starts)) + owners + 1
            sav, perm, dep = pair_savings(self.model, self.table, owners, partners, self.dsel)
            for i, p in enumerate(range(p0, p1)):
                sl = slice(starts[i], starts[i + 1])
                self._store_batch(p, partners[sl], sav[sl], perm[sl], dep[sl])
            p0 = p1

    def _fill_batch(self, owner: int, partners: np.ndarray) -> None:
        sav, perm, dep = pair_savings(self.model, self.table, owner, partners, self.dsel)
        self._store_batch(owner, partners, sav, perm, dep)

    def _store_batch(self, owner, partners, sav, perm, dep) -> None:
        keep = np.isfinite(sav)
        if not keep.any():
            return
        partners, sav, perm, dep = partners[keep], sav[keep], perm[keep], dep[keep]
        order = np.lexsort((partners, -sav))
        batch = _Batch(partners[order], sav[order], perm[order], dep[order])
        self.batches[owner] = batch
        self.inserted += len(order)
        self._push(owner, 0)

    def _push(self, owner: int, pos: int) -> None:
        batch = self.batches[owner]
        n = len(batch.partner)
        while pos < n and not self.alive[batch.partner[pos]]:
            pos += 1
        if pos < n:
            q = int(batch.partner[pos])
            lo, hi = (owner, q) if owner < q else (q, owner)
            heapq.heappush(self.heap, (-float(batch.saving[pos]), lo, hi, owner, pos))

    @property
    def live_routes(self) -> list[Route]:
        return [self.routes[i] for i in np.flatnonzero(self.alive[:len(self.routes)])]

    @property
    def total_cost(self) -> float:
        n = len(self.routes)
        return math.fsum(self.table.cost[:n][self.alive[:n]].tolist())

    def step(self) -> MergeReport | None:
        """Apply the best remaining merge; ``None`` once the heap is exhausted."""
        while self.heap:
            _, _, _, owner, pos = heapq.heappop(self.heap)
            batch = self.batches.get(owner)
            if batch is None:
                continue
            partner = int(batch.partner[pos])
            self._push(owner, pos + 1)
            if not self.alive[partner]:
                continue
            model = self.model
            perm = PERMUTATIONS[int(batch.perm[pos])]
            depot = int(model.depots[batch.depot[pos]])
            entry = SavingsEntry(owner, partner, float(batch.saving[pos]), perm, depot)
            new = merge(model, self.routes[owner], self.routes[partner], perm, depot, self.next_id)
            for r in (owner, partner):
                self.alive[r] = False
                self.batches.pop(r, None)
            self._add(new)
            self.merges += 1
            live = np.flatnonzero(self.alive[:new.id])
            self._fill_batch(new.id, live)
            return MergeReport(entry, new)
        return None

    def run(self) -> "SolverState":
        while self.step() is not None:
            pass
        return self

    def extract_solution(self, algorithm: str = "mem") -> Solution:
        """Snapshot of the live routes; valid at any point of the run."""
        meta = {"merges": self.merges, "heap_entries": self.inserted}
        return build_solution(self.model, self.live_routes, algorithm, meta)


def initial_routes(model: RoutingModel, depot_indices=None, subset=None) -> list[Route]:
    """Cheapest feasible (depot, direction) per required edge.

    Candidates are scanned depot by depot, forward before reverse, and the
    first strict minimum wins.  ``subset`` restricts the edges to the given
    required indices; route ids are assigned 0, 1, ... in that order.
    """
    req = np.arange(model.n_required) if subset is None else np.asarray(subset, dtype=np.int64)
    m = len(req)
    if m == 0:
        return []
    dsel = np.arange(len(model.depots)) if depot_indices is None else np.asarray(depot_indices)
    arcs = np.stack([2 * req, 2 * req + 1], axis=1).ravel()
    sk, ek = model.start_key[arcs], model.end_key[arcs]
    cost = (model.out_cost[dsel][:, sk] + model.in_cost[dsel][:, ek]) + model.svc_cost[arcs][None, :]
    cost = cost + model.setup_cost
    dem = (model.out_demand[dsel][:, sk] + model.in_demand[dsel][:, ek]) + model.svc_demand[arcs][None, :]
    cost[dem > model.limit] = np.inf
    # candidate order: depot-major, then forward, then reverse
    cand = cost.reshape(len(dsel), m, 2).transpose(1, 0, 2).reshape(m, -1)
    best = np.argmin(cand, axis=1)
    bad = ~np.isfinite(cand[np.arange(m), best])
    if bad.any():
        raise InfeasibleInstance([model.required[req[i]] for i in np.flatnonzero(bad)],
                                 "required edges cannot be serviced within capacity")
    routes = []
    for i in range(m):
        d, rev = divmod(int(best[i]), 2)
        routes.append(arc_route(model, 2 * int(req[i]) + rev, int(model.depots[dsel[d]]), i))
    return routes


def mem_state(model: RoutingModel, depot_indices=None) -> SolverState:
    return SolverState(model, initial_routes(model, depot_indices), depot_indices)


def solve_mem(graph: Graph, params: RobotParams, depot: int | None = None, *, model: RoutingModel | None = None) -> Solution:
    """Single-depot MEM anchored at ``depot`` (the graph's first depot by default)."""
    if model is None:
        depot = graph.depots[0] if depot is None else depot
        model = RoutingModel(graph, params, [depot])
    elif depot is not None and int(depot) not in model.depot_index:
        raise ValueError(f"depot {depot} is not in the routing model")
    dsel = None if depot is None else [model.depot_index[int(depot)]]
    return mem_state(model, dsel).run().extract_solution("mem")
