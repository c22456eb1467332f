import json
import math

import numpy as np
import pytest

from linecov.errors import SchemaError
from linecov.io import (gen_instance, import_geojson, instance_to_dict, load_solution, parse_instance,
                        solution_geojson, solution_svg, solution_to_dict, write_instance, write_solution)
from linecov.mem import solve_mem
from linecov.multidepot import solve_md_mem
from linecov.routes import Solution
from linecov.turns import Pose, dubins_path, solve_md_mem_turns
from conftest import generated
from test_exact import GOLDEN


def _minimal():
    return json.loads((GOLDEN / "single_edge.json").read_text())


def test_instance_round_trip(tmp_path):
    doc = _minimal()
    g, params, wind = parse_instance(doc)
    assert instance_to_dict(g, params, wind) == doc
    write_instance(g, tmp_path / "i.json", params, wind)
    g2, p2, w2 = parse_instance(tmp_path / "i.json")
    assert instance_to_dict(g2, p2, w2) == doc


def test_generated_round_trip_is_stable():
    doc = gen_instance(3, 25, depot_count=2, mode="explicit")
    g, params, wind = parse_instance(doc)
    assert instance_to_dict(g, params, wind, name=doc["name"]) == doc


def test_unknown_field_named():
    doc = _minimal()
    doc["edges"][0]["colour"] = "red"
    with pytest.raises(SchemaError, match="colour"):
        parse_instance(doc)
    doc = _minimal()
    doc["robot"]["speed"] = 3
    with pytest.raises(SchemaError, match="speed"):
        parse_instance(doc)


def test_one_sided_service_cost_rejected():
    doc = _minimal()
    del doc["edges"][0]["service_cost_rev"]
    with pytest.raises(SchemaError, match="service_cost_rev"):
        parse_instance(doc)


def test_bad_references_and_json(tmp_path):
    doc = _minimal()
    doc["depots"] = [7]
    with pytest.raises(SchemaError, match="depots"):
        parse_instance(doc)
    p = tmp_path / "bad.json"
    p.write_text('{\n  "format_version": 1,\n  "vertices": [,]\n}')
    with pytest.raises(SchemaError, match=r"bad.json:3:"):
        parse_instance(p)
    doc = _minimal()
    doc["edges"][0]["service_cost_fwd"] = -1
    with pytest.raises(SchemaError):
        parse_instance(doc)


def test_solution_files_round_trip(tmp_path):
    g, params = generated(2, 30, depots=2)
    params = params.with_(setup_cost=5.0)
    sol = solve_md_mem(g, params)
    write_solution(sol, tmp_path / "s.json", ["json", "geojson", "svg"], graph=g, params=params, seed=2)
    doc = load_solution(tmp_path / "s.json")
    assert doc["totals"]["cost"] == sol.total_cost
    assert doc["totals"]["num_routes"] == sol.num_routes
    assert doc["metadata"]["seed"] == 2 and "wall_time" not in doc["metadata"]
    for route, rdoc, steps in zip(sol.routes, doc["routes"], sol.steps):
        assert [s["mode"] for s in rdoc["steps"]] == [s.mode for s in steps]
        assert [s["cost"] for s in rdoc["steps"]] == [s.cost for s in steps]
        assert math.fsum(s["cost"] for s in rdoc["steps"]) == pytest.approx(rdoc["cost"] - 5.0, rel=1e-9)
    assert math.fsum(r["cost"] for r in doc["routes"]) == pytest.approx(doc["totals"]["cost"], rel=1e-12)
    gj = json.loads((tmp_path / "s.geojson").read_text())
    _check_geojson(gj)
    assert (tmp_path / "s.svg").read_text().startswith("<svg")
    with pytest.raises(SchemaError):
        (tmp_path / "x.json").write_text("{}")
        load_solution(tmp_path / "x.json")


def _check_geojson(doc):
    assert doc["type"] == "FeatureCollection"
    for f in doc["features"]:
        assert f["type"] == "Feature" and isinstance(f["properties"], dict)
        geom = f["geometry"]
        if geom["type"] == "Point":
            assert len(geom["coordinates"]) == 2
        else:
            assert geom["type"] == "LineString" and len(geom["coordinates"]) >= 2
            assert all(len(c) == 2 and all(math.isfinite(x) for x in c) for c in geom["coordinates"])


def test_geojson_counts():
    g, params = generated(1, 1)
    sol = solve_mem(g, params)
    gj = solution_geojson(sol, g)
    n_steps = len(sol.steps[0])
    assert len(gj["features"]) == n_steps + 1
    assert sum(f["geometry"]["type"] == "Point" for f in gj["features"]) == 1
    empty = Solution([], [], 0.0)
    assert solution_geojson(empty) == {"type": "FeatureCollection", "features": []}
    assert solution_svg(empty).startswith("<svg")


def test_turn_aware_geometry_sampled_finely():
    g, params = generated(6, 8, mode="explicit")
    sol = solve_md_mem_turns(g, params)
    gj = solution_geojson(sol, g)
    _check_geojson(gj)
    assert any(f["properties"].get("maneuver") == "dubins" for f in gj["features"])


def _dist_to_polyline(p, poly):
    a, b = poly[:-1], poly[1:]
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0, 1)
    proj = a + t[:, None] * ab
    return np.hypot(*(proj - p).T).min()


@pytest.mark.parametrize("seed", range(5))
def test_dubins_sampling_chord_error(seed):
    rng = np.random.default_rng(seed)
    s = Pose(*rng.uniform(-50, 50, 2), rng.uniform(-3, 3))
    e = Pose(*rng.uniform(-50, 50, 2), rng.uniform(-3, 3))
    _, path = dubins_path(s, e, rng.uniform(3, 30))
    coarse = path.sample(0.5)
    fine = path.sample(1e-4)
    worst = max(_dist_to_polyline(p, coarse) for p in fine)
    assert worst <= 0.5 + 1e-9


def test_generator_determinism_and_counts(tmp_path):
    a = gen_instance(9, 5, depot_count=2)
    b = gen_instance(9, 5, depot_count=2)
    write_instance(a, tmp_path / "a.json")
    write_instance(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    g, params, _ = parse_instance(a)
    assert len(g.required) == 5 and len(g.depots) == 2
    sol = solve_mem(g, params)
    assert all(r.demand <= params.capacity for r in sol.routes)
    assert gen_instance(10, 5) != a
    auto = gen_instance(1, 200, depot_count="auto")
    g, params, _ = parse_instance(auto)
    assert len(g.depots) >= 2


def test_import_snaps_endpoints(tmp_path):
    gj = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {}, "geometry": {"type": "LineString", "coordinates": [[0, 0], [10, 0]]}},
        {"type": "Feature", "properties": {},
         "geometry": {"type": "LineString", "coordinates": [[10.3, 0.1], [10, 20], [0.2, 0.2]]}},
    ]}
    doc = import_geojson(gj)
    assert len(doc["vertices"]) == 3 and len(doc["edges"]) == 3
    g, params, _ = parse_instance(doc)
    assert len(g.required) == 3
    far = import_geojson(gj, snap=0.1)
    assert len(far["vertices"]) == 5
    with pytest.raises(SchemaError):
        import_geojson({"type": "FeatureCollection", "features": []})
