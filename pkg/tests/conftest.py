import math
import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from linecov.cost_model import RobotParams  # noqa: E402
from linecov.graph import build_graph  # noqa: E402
from linecov.io import gen_instance, parse_instance  # noqa: E402
from linecov.turns import TurnWarning  # noqa: E402

warnings.filterwarnings("ignore", category=TurnWarning)

UNIT = RobotParams(v_service=1.0, v_deadhead=1.0, capacity=math.inf)


def line_instance(xs, required_pairs, depots=(0,), extra_vertices=(), mode="explicit"):
    """Vertices on the x axis; edges between consecutive listed vertices."""
    verts = [{"id": i, "x": float(x), "y": 0.0} for i, x in enumerate(xs)]
    verts += [{"id": len(xs) + i, "x": float(x), "y": float(y)} for i, (x, y) in enumerate(extra_vertices)]
    edges = []
    for i, (a, b, req) in enumerate(required_pairs):
        edges.append({"id": i, "tail": a, "head": b, "required": req})
    return {"vertices": verts, "edges": edges, "depots": list(depots), "mode": mode}


def collinear(params=UNIT, depots=(0,), lam=None):
    """Depot (0,0); A=(10,0)-(20,0) and B=(20,0)-(30,0) required; 0-1 access edge."""
    doc = line_instance([0, 10, 20, 30], [(1, 2, True), (2, 3, True), (0, 1, False)], depots)
    if lam is not None:
        params = params.with_(setup_cost=lam)
    return build_graph(doc, params), params


def collinear_light(capacity, lam=0.0):
    """Collinear example with free deadhead demand: each edge alone needs 10,
    both together 20, so a capacity in [10, 20) forbids every merge."""
    doc = line_instance([0, 10, 20, 30], [(1, 2, True), (2, 3, True), (0, 1, False)])
    for e in doc["edges"]:
        e.update(deadhead_demand_fwd=0.0, deadhead_demand_rev=0.0)
    params = UNIT.with_(capacity=capacity, setup_cost=lam)
    return build_graph(doc, params), params


def generated(seed, m, depots=1, mode="complete", area=1000.0, **kw):
    doc = gen_instance(seed, m, area, depots, mode, **kw)
    graph, params, _ = parse_instance(doc)
    return graph, params


@pytest.fixture
def collinear_instance():
    return collinear()
