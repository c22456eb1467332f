"""Benchmark harness: run algorithms over instance files and tabulate costs."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .exact import brute_force
from .graph import Graph
from .io import parse_instance
from .mem import solve_mem
from .multidepot import cluster_first_baseline, solve_md_mem
from .turns import solve_md_mem_turns

ALGORITHMS = {
    "mem": lambda g, p: solve_mem(g, p),
    "md-mem": lambda g, p: solve_md_mem(g, p),
    "md-mem-turns": lambda g, p: solve_md_mem_turns(g, p),
    "cluster-baseline": lambda g, p: cluster_first_baseline(g, p),
    "oracle": lambda g, p: brute_force(g, p),
}


def cost_diff_pct(cost: float, reference: float) -> float:
    """``100 (c - c*) / c*``; undefined unless the reference is positive."""
    if not reference > 0:
        raise ValueError("reference cost must be positive")
    return 100.0 * (cost - reference) / reference


def average_service_cost(graph: Graph) -> float:
    """Sum over required edges of the mean of both service costs."""
    return math.fsum((graph.edges[e].service_cost[0] + graph.edges[e].service_cost[1]) / 2
                     for e in graph.required)


def worker_count() -> int:
    env = os.environ.get("LINECOV_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _run_one(path, algos, reference):
    graph, params, _ = parse_instance(path)
    results = {}
    for name in dict.fromkeys(list(algos) + [reference]):
        t0 = time.perf_counter()
        sol = ALGORITHMS[name](graph, params)
        results[name] = (sol, time.perf_counter() - t0)
    ref_cost = results[reference][0].total_cost
    cbar = average_service_cost(graph)
    rows = []
    for name in algos:
        sol, dt = results[name]
        rows.append({
            "instance": Path(path).stem, "algorithm": name, "m": len(graph.required),
            "depots": len(graph.depots), "cost": sol.total_cost, "routes": sol.num_routes,
            "runtime_s": dt,
            "cost_diff_pct": cost_diff_pct(sol.total_cost, ref_cost) if ref_cost > 0 else float("nan"),
            "cost_diff_avg_pct": cost_diff_pct(sol.total_cost, cbar) if cbar > 0 else float("nan"),
        })
    return rows


def bench(instances, algos, reference: str = "mem", csv_path=None, workers: int | None = None) -> list:
    """Per-instance metrics rows, sorted by instance then algorithm order."""
    for a in list(algos) + [reference]:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    paths = sorted(Path(p) for p in instances)
    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            chunks = list(ex.map(lambda p: _run_one(p, algos, reference), paths))
    else:
        chunks = [_run_one(p, algos, reference) for p in paths]
    rows = [r for chunk in chunks for r in chunk]
    if csv_path is not None:
        write_csv(rows, csv_path)
    return rows


def summarize(rows) -> dict:
    """Mean cost, route count and cost difference per algorithm."""
    out = {}
    for name in dict.fromkeys(r["algorithm"] for r in rows):
        sel = [r for r in rows if r["algorithm"] == name]
        out[name] = {
            "instances": len(sel),
            "mean_cost": math.fsum(r["cost"] for r in sel) / len(sel),
            "mean_routes": sum(r["routes"] for r in sel) / len(sel),
            "mean_cost_diff_pct": math.fsum(r["cost_diff_pct"] for r in sel) / len(sel),
        }
    return out


def write_csv(rows, path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
