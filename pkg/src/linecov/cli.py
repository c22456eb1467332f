"""``linecov`` command line.

Exit codes: 0 success, 2 invalid input, 3 infeasible instance, 4 size guard.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .errors import (GraphError, InfeasibleEdge, KTooLarge, LinecovError, SchemaError, TooLarge,
                     WindExceedsAirspeed)
from .exact import brute_force, export_ilp_lp
from .graph import validate_instance
from .io import gen_instance, import_geojson, parse_instance, solution_to_dict, write_instance, write_solution
from .mem import solve_mem
from .multidepot import cluster_first_baseline, k_medoids_depots, solve_md_mem, suggest_depot_count
from .turns import solve_md_mem_turns

OK, BAD_INPUT, INFEASIBLE, TOO_LARGE = 0, 2, 3, 4


def _load(args):
    graph, params, wind = parse_instance(args.input)
    changes = {}
    if getattr(args, "capacity", None) is not None:
        changes["capacity"] = args.capacity
    if getattr(args, "lam", None) is not None:
        changes["setup_cost"] = args.lam
    if changes:
        params = params.with_(**changes)
    return graph, params, wind


def cmd_solve(args):
    graph, params, wind = _load(args)
    t0 = time.perf_counter()
    if args.algo == "mem":
        sol = solve_mem(graph, params)
    elif args.algo == "md-mem":
        sol = solve_md_mem(graph, params)
    elif args.algo == "md-mem-turns":
        sol = solve_md_mem_turns(graph, params, smooth=not args.dubins_only)
    else:
        sol = cluster_first_baseline(graph, params)
    wall = time.perf_counter() - t0 if args.timing else None
    formats = ["json"] + (["geojson"] if args.geojson else []) + (["svg"] if args.svg else [])
    write_solution(sol, args.output, formats, graph=graph, params=params, wind=wind, seed=args.seed,
                   wall_time=wall, geojson_path=args.geojson, svg_path=args.svg)
    print(f"{sol.algorithm}: {sol.num_routes} routes, total cost {sol.total_cost:.6f}")
    return OK


def cmd_export_ilp(args):
    graph, params, _ = _load(args)
    text = export_ilp_lp(graph, params, args.depot, args.K, max_variables=args.max_variables)
    Path(args.out).write_text(text)
    return OK


def cmd_oracle(args):
    graph, params, _ = _load(args)
    sol = brute_force(graph, params, turn_aware=args.turn_aware)
    doc = solution_to_dict(sol, params)
    if args.output:
        Path(args.output).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"optimum: {sol.num_routes} routes, total cost {sol.total_cost:.6f}")
    return OK


def cmd_gen(args):
    depots = args.depots if args.depots == "auto" else int(args.depots)
    doc = gen_instance(args.seed, args.m, args.area, depots, args.mode)
    write_instance(doc, args.out)
    return OK


def cmd_suggest(args):
    graph, params, _ = _load(args)
    k = args.k if args.k is not None else suggest_depot_count(graph, params.capacity)
    depots = k_medoids_depots(graph, k, args.seed)
    print(json.dumps({"count": k, "depots": depots}))
    return OK


def cmd_bench(args):
    from .bench import bench, summarize
    paths = sorted(Path(args.suite).glob("*.json"))
    rows = bench(paths, args.algos.split(","), args.reference, args.csv)
    print(json.dumps(summarize(rows), indent=1))
    return OK


def cmd_validate(args):
    graph, params, _ = _load(args)
    rep = validate_instance(graph, params)
    if rep.feasible:
        print(f"feasible: {len(graph.required)} required edges, {len(graph.depots)} depots")
        return OK
    print(f"infeasible edges: {rep.infeasible_edges}")
    return INFEASIBLE


def cmd_import(args):
    doc = import_geojson(args.input, args.snap, [int(d) for d in args.depots.split(",")])
    write_instance(doc, args.out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linecov", description="Multi-robot line coverage routing")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="plan routes")
    p.add_argument("--algo", choices=["mem", "md-mem", "md-mem-turns", "cluster-baseline"], default="md-mem")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--geojson")
    p.add_argument("--svg")
    p.add_argument("--capacity", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--dubins-only", action="store_true", help="no smooth corner arcs (turn-aware only)")
    p.add_argument("--timing", action="store_true", help="record wall time in the output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("export-ilp", help="write the single-depot ILP as an LP file")
    p.add_argument("--input", required=True)
    p.add_argument("-K", type=int)
    p.add_argument("--depot", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--max-variables", type=int, default=2_000_000)
    p.set_defaults(func=cmd_export_ilp)

    p = sub.add_parser("oracle", help="exact optimum for tiny instances")
    p.add_argument("--input", required=True)
    p.add_argument("--turn-aware", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--area", type=float, default=1000.0)
    p.add_argument("--depots", default="1", help="count or 'auto'")
    p.add_argument("--mode", choices=["complete", "explicit"], default="complete")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("suggest-depots", help="depot count and k-medoids placement")
    p.add_argument("--input", required=True)
    p.add_argument("-k", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("bench", help="compare algorithms over a directory of instances")
    p.add_argument("--suite", required=True)
    p.add_argument("--algos", default="mem,md-mem")
    p.add_argument("--reference", choices=["oracle", "mem"], default="mem")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check an instance")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("import", help="convert GeoJSON lines into an instance")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snap", type=float, default=0.5)
    p.add_argument("--depots", default="0")
    p.set_defaults(func=cmd_import)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, GraphError, WindExceedsAirspeed, KTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except InfeasibleEdge as exc:
        print(f"infeasible: {exc} (edges {exc.edges})", file=sys.stderr)
        return INFEASIBLE
    except TooLarge as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return TOO_LARGE
    except LinecovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
