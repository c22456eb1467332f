"""Instance and solution files, instance generation and GeoJSON import."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator
from scipy.spatial import Delaunay, cKDTree

from .cost_model import RobotParams, WindModel, populate_costs
from .errors import LinecovError, SchemaError
from .graph import COMPLETE, EXPLICIT, Edge, Graph, build_graph, check_graph, validate_instance

FORMAT_VERSION = 1
_PAIRS = ("service_cost", "service_demand", "deadhead_cost", "deadhead_demand")
_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_pos = {"type": "number", "exclusiveMinimum": 0}

_edge_props = {
    "id": {"type": "integer", "minimum": 0},
    "tail": {"type": "integer", "minimum": 0},
    "head": {"type": "integer", "minimum": 0},
    "required": {"type": "boolean"},
}
for _k in _PAIRS:
    _edge_props[_k + "_fwd"] = _nonneg
    _edge_props[_k + "_rev"] = _nonneg

INSTANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["format_version", "vertices", "edges", "depots"],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "name": {"type": "string"},
        "mode": {"enum": [EXPLICIT, COMPLETE]},
        "vertices": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "x", "y"],
            "properties": {"id": {"type": "integer", "minimum": 0}, "x": _num, "y": _num}}},
        "edges": {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": ["id", "tail", "head"],
            "properties": _edge_props,
            "dependentRequired": {k + s: [k + o] for k in _PAIRS for s, o in (("_fwd", "_rev"), ("_rev", "_fwd"))}}},
        "depots": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "wind": {"type": "object", "additionalProperties": False,
                 "properties": {"speed": _nonneg, "direction": _num}},
        "robot": {"type": "object", "additionalProperties": False, "properties": {
            "v_service": _pos, "v_deadhead": _pos, "capacity": _pos, "lambda": _nonneg,
            "omega_max": _pos, "a_max": _pos, "delta_max": _pos, "min_speed": _nonneg,
            "depot_headings": {"type": "object", "patternProperties": {"^[0-9]+$": _num},
                               "additionalProperties": False}}},
    },
}
_validator = Draft202012Validator(INSTANCE_SCHEMA)

_ROBOT_KEYS = {"v_service": "v_service", "v_deadhead": "v_deadhead", "capacity": "capacity",
               "lambda": "setup_cost", "omega_max": "omega_max", "a_max": "a_max",
               "delta_max": "delta_max", "min_speed": "min_speed"}


def _load_json(source):
    if isinstance(source, dict):
        return source, "<dict>"
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    try:
        return json.loads(text), str(path)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def validate_instance_dict(doc: dict, where: str = "<instance>") -> None:
    errors = sorted(_validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors[:10]:
            loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{where}: {loc}: {err.message}")
        raise SchemaError("\n".join(lines))


def params_from_dict(robot: dict | None) -> RobotParams:
    robot = robot or {}
    kw = {_ROBOT_KEYS[k]: float(v) for k, v in robot.items() if k in _ROBOT_KEYS}
    if "depot_headings" in robot:
        kw["depot_headings"] = {int(k): float(v) for k, v in robot["depot_headings"].items()}
    try:
        return RobotParams(**kw)
    except ValueError as exc:
        raise SchemaError(f"robot: {exc}") from exc


def parse_instance(source) -> tuple[Graph, RobotParams, WindModel]:
    """Read and validate an instance file (path or already-decoded mapping).

    Costs missing from the file are derived from geometry, robot speeds and
    wind; values given explicitly are kept.
    """
    doc, where = _load_json(source)
    validate_instance_dict(doc, where)
    params = params_from_dict(doc.get("robot"))
    w = doc.get("wind", {})
    wind = WindModel(float(w.get("speed", 0.0)), float(w.get("direction", 0.0)))
    n = len(doc["vertices"])
    for e in doc["edges"]:
        for key in ("tail", "head"):
            if e[key] >= n:
                raise SchemaError(f"{where}: edges/{e['id']}: {key} {e[key]} is not a vertex")
    for d in doc["depots"]:
        if d >= n:
            raise SchemaError(f"{where}: depots: {d} is not a vertex")
    try:
        graph = build_graph(doc, params, wind)
    except LinecovError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from exc
    return graph, params, wind


def _num_out(x: float):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2 ** 53 else x


def instance_to_dict(graph: Graph, params: RobotParams | None = None, wind: WindModel | None = None,
                     name: str | None = None) -> dict:
    """Instance mapping for ``graph``; per-edge values are written only where
    they differ from what the geometry would give."""
    params = params or RobotParams()
    wind = wind or graph.wind
    derived = None
    if any(not e.is_loop for e in graph.edges):
        bare = replace(graph, edges=tuple(replace(e, **{k: None for k in _PAIRS}) for e in graph.edges))
        derived = populate_costs(bare, params, wind).edges
    doc = {"format_version": FORMAT_VERSION}
    if name:
        doc["name"] = name
    doc["mode"] = graph.mode
    doc["vertices"] = [{"id": i, "x": _num_out(x), "y": _num_out(y)} for i, (x, y) in enumerate(graph.coords)]
    edges = []
    for e in graph.edges:
        d = {"id": e.id, "tail": e.tail, "head": e.head}
        if e.required:
            d["required"] = True
        for k in _PAIRS:
            val = getattr(e, k)
            if val is None or (e.is_loop and k.startswith("deadhead") and not any(val)):
                continue
            ref = getattr(derived[e.id], k) if derived is not None else None
            if e.is_loop or ref is None or tuple(val) != tuple(ref):
                d[k + "_fwd"], d[k + "_rev"] = _num_out(val[0]), _num_out(val[1])
        edges.append(d)
    doc["edges"] = edges
    doc["depots"] = [int(v) for v in graph.depots]
    if wind.speed != 0.0:
        doc["wind"] = {"speed": _num_out(wind.speed), "direction": wind.direction}
    robot = {}
    base = RobotParams()
    for key, attr in _ROBOT_KEYS.items():
        if getattr(params, attr) != getattr(base, attr):
            robot[key] = _num_out(getattr(params, attr))
    if params.depot_headings:
        robot["depot_headings"] = {str(k): float(v) for k, v in sorted(params.depot_headings.items())}
    if robot:
        doc["robot"] = robot
    return doc


def write_instance(doc_or_graph, path, params=None, wind=None) -> None:
    doc = doc_or_graph if isinstance(doc_or_graph, dict) else instance_to_dict(doc_or_graph, params, wind)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


# -- solutions -----------------------------------------------------------

def params_hash(params: RobotParams, wind: WindModel | None = None) -> str:
    data = asdict(params)
    data["depot_headings"] = sorted(data["depot_headings"].items())
    if wind is not None:
        data["wind"] = [wind.speed, wind.direction]
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]


def solution_to_dict(solution, params: RobotParams | None = None, wind=None, seed=None,
                     wall_time: float | None = None) -> dict:
    routes = []
    for route, steps in zip(solution.routes, solution.steps):
        rows = []
        for s in steps:
            row = {"mode": s.mode, "cost": s.cost, "demand": s.demand, "vertices": [int(v) for v in s.vertices]}
            if s.edge is not None:
                row["edge"] = int(s.edge)
                row["reverse"] = bool(s.reverse)
            if s.maneuver is not None:
                row["maneuver"] = s.maneuver
            row["geometry"] = [[float(x), float(y)] for x, y in s.geometry]
            rows.append(row)
        routes.append({"id": route.id, "depot": route.depot, "cost": route.cost, "demand": route.demand,
                       "steps": rows})
    meta = {"algorithm": solution.algorithm, "setup_cost": solution.setup_cost,
            "depots": list(solution.depots)}
    if params is not None:
        meta["params_hash"] = params_hash(params, wind)
    if seed is not None:
        meta["seed"] = seed
    if wall_time is not None:
        meta["wall_time"] = wall_time
    return {"format_version": FORMAT_VERSION,
            "totals": {"cost": solution.total_cost, "demand": solution.total_demand,
                       "num_routes": solution.num_routes},
            "routes": routes, "metadata": meta}


def solution_geojson(solution, graph: Graph | None = None) -> dict:
    """FeatureCollection with one LineString per step and a Point per used depot."""
    feats = []
    for route, steps in zip(solution.routes, solution.steps):
        for i, s in enumerate(steps):
            coords = [[float(x), float(y)] for x, y in s.geometry]
            if len(coords) == 1:
                coords = coords * 2
            props = {"route_id": route.id, "step": i, "mode": s.mode, "cost": s.cost}
            if s.edge is not None:
                props["edge"] = s.edge
            if s.maneuver is not None:
                props["maneuver"] = s.maneuver
            feats.append({"type": "Feature", "geometry": {"type": "LineString", "coordinates": coords},
                          "properties": props})
    if graph is not None:
        for d in sorted({r.depot for r in solution.routes}):
            x, y = graph.coords[d]
            feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": [float(x), float(y)]},
                          "properties": {"depot": int(d)}})
    return {"type": "FeatureCollection", "features": feats}


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
            "#bcbd22", "#17becf")


def solution_svg(solution, graph: Graph | None = None, size: int = 800) -> str:
    """Static drawing: services solid, deadheads dashed, one colour per route."""
    pts = [p for steps in solution.steps for s in steps for p in s.geometry]
    if graph is not None:
        pts += [tuple(graph.coords[d]) for d in solution.depots]
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}"></svg>\n'
    arr = np.asarray(pts, dtype=float)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    pad = 10.0
    scale = (size - 2 * pad) / span

    def xy(p):
        return f"{pad + (p[0] - lo[0]) * scale:.2f},{size - pad - (p[1] - lo[1]) * scale:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           '<rect width="100%" height="100%" fill="white"/>']
    for route, steps in zip(solution.routes, solution.steps):
        colour = _PALETTE[route.id % len(_PALETTE)]
        for s in steps:
            dash = ' stroke-dasharray="6,4"' if s.mode == "deadhead" else (
                ' stroke-dasharray="2,2"' if s.mode == "turn" else "")
            width = 2.5 if s.mode == "service" else 1.2
            pl = " ".join(xy(p) for p in s.geometry)
            out.append(f'<polyline points="{pl}" fill="none" stroke="{colour}" stroke-width="{width}"{dash}/>')
    if graph is not None:
        for d in solution.depots:
            x, y = map(float, xy(graph.coords[d]).split(","))
            out.append(f'<rect x="{x - 5:.2f}" y="{y - 5:.2f}" width="10" height="10" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_solution(solution, path=None, formats=("json",), *, graph: Graph | None = None,
                   params=None, wind=None, seed=None, wall_time=None, geojson_path=None, svg_path=None) -> None:
    """Write the solution as JSON, GeoJSON and/or SVG.

    ``path`` is the JSON target; the other formats go to ``geojson_path`` /
    ``svg_path`` or next to ``path`` with the matching suffix.
    """
    base = Path(path) if path is not None else None
    if "json" in formats:
        doc = solution_to_dict(solution, params, wind, seed, wall_time)
        base.write_text(json.dumps(doc, indent=1) + "\n")
    if "geojson" in formats:
        target = Path(geojson_path) if geojson_path else base.with_suffix(".geojson")
        target.write_text(json.dumps(solution_geojson(solution, graph)) + "\n")
    if "svg" in formats:
        target = Path(svg_path) if svg_path else base.with_suffix(".svg")
        target.write_text(solution_svg(solution, graph))


def load_solution(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != FORMAT_VERSION or "routes" not in doc:
        raise SchemaError(f"{path}: not a solution file")
    return doc


# -- generation ----------------------------------------------------------

def _spanning_forest(n, edges, rng):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = rng.permutation(len(edges))
    tree, rest = [], []
    for i in order:
        a, b = edges[i]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.append(edges[i])
        else:
            rest.append(edges[i])
    return tree, rest


def _candidate_edges(pts):
    n = len(pts)
    if n < 4:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    tri = Delaunay(pts)
    seen = set()
    for s in tri.simplices:
        for i in range(3):
            a, b = sorted((int(s[i]), int(s[(i + 1) % 3])))
            seen.add((a, b))
    return sorted(seen)


def gen_instance(seed: int, m: int, area: float = 1000.0, depot_count=1, mode: str = COMPLETE,
                 wind: WindModel | None = WindModel(2.0, math.pi / 4), params: RobotParams | None = None,
                 max_tries: int = 50) -> dict:
    """Random road-like instance: planar points joined into a connected
    required network of ``m`` edges.

    ``depot_count`` may be ``"auto"`` to use the demand-based depot count.
    Depots are distinct random vertices, redrawn until every edge can be
    serviced within capacity.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    params = params or RobotParams()
    wind = wind or WindModel()
    rng = np.random.default_rng(seed)
    n = min(m + 1, math.ceil(m / 1.25) + 1)
    for _ in range(max_tries):
        pts = np.round(rng.uniform(0.0, area, size=(n, 2)), 3)
        cands = _candidate_edges(pts)
        tree, rest = _spanning_forest(n, cands, rng)
        if len(tree) != n - 1 or len(tree) + len(rest) < m:
            continue
        extra = [rest[i] for i in sorted(rng.choice(len(rest), size=m - len(tree), replace=False))]
        req = sorted(tree + extra)
        rest_set = sorted(set(rest) - set(extra))
        edges = [Edge(i, a, b, True) for i, (a, b) in enumerate(req)]
        if mode == EXPLICIT:
            edges += [Edge(len(edges) + i, a, b, False) for i, (a, b) in enumerate(rest_set)]
        graph = populate_costs(Graph(pts, tuple(edges), (0,), mode=mode), params, wind)
        if depot_count == "auto":
            from .multidepot import suggest_depot_count
            k = min(n, suggest_depot_count(graph, params.capacity))
        else:
            k = int(depot_count)
            if not 1 <= k <= n:
                raise ValueError(f"depot count {k} must lie in [1, {n}]")
        for _ in range(max_tries):
            depots = tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False)))
            g = check_graph(replace(graph, depots=depots))
            if validate_instance(g, params).feasible:
                doc = instance_to_dict(g, params, wind, name=f"gen-{seed}-{m}")
                return doc
    raise LinecovError("could not generate a feasible instance; enlarge capacity or shrink area")


# -- GeoJSON import ------------------------------------------------------

def import_geojson(source, snap: float = 0.5, depots=(0,), required: bool = True) -> dict:
    """Instance mapping from GeoJSON LineStrings.

    Each polyline segment becomes an edge; endpoints closer than ``snap``
    metres are merged into one vertex.  Coordinates are taken as planar metres.
    """
    doc, where = _load_json(source)
    lines = []

    def collect(geom):
        if geom is None:
            return
        t = geom.get("type")
        if t == "LineString":
            lines.append(geom["coordinates"])
        elif t == "MultiLineString":
            lines.extend(geom["coordinates"])
        elif t == "GeometryCollection":
            for g in geom.get("geometries", []):
                collect(g)

    feats = doc.get("features", [doc] if doc.get("type") == "Feature" else [])
    if doc.get("type") in ("LineString", "MultiLineString", "GeometryCollection"):
        collect(doc)
    for f in feats:
        collect(f.get("geometry"))
    raw = np.array([c[:2] for line in lines for c in line], dtype=float).reshape(-1, 2)
    if len(raw) == 0:
        raise SchemaError(f"{where}: no LineString geometry found")
    # union-find over points within the snapping radius
    parent = np.arange(len(raw))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in sorted(cKDTree(raw).query_pairs(snap)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(raw))])
    uniq, label = np.unique(roots, return_inverse=True)
    coords = np.array([raw[roots == r].mean(axis=0) for r in uniq])
    edges, seen, k = [], set(), 0
    for line in lines:
        for a, b in zip(range(k, k + len(line) - 1), range(k + 1, k + len(line))):
            u, v = int(label[a]), int(label[b])
            key = (min(u, v), max(u, v))
            if u != v and key not in seen:
                seen.add(key)
                edges.append({"id": len(edges), "tail": u, "head": v, "required": required})
        k += len(line)
    return {"format_version": FORMAT_VERSION, "mode": EXPLICIT,
            "vertices": [{"id": i, "x": float(x), "y": float(y)} for i, (x, y) in enumerate(coords)],
            "edges": edges, "depots": [int(d) for d in depots]}
