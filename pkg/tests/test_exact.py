import math
import re
from pathlib import Path

import numpy as np
import pytest

from linecov.errors import InfeasibleInstance, TooLarge, TooManyVariables
from linecov.exact import brute_force, export_ilp_lp
from linecov.graph import shortest_deadhead
from linecov.io import parse_instance
from linecov.routes import RoutingModel, init_route
from conftest import collinear, collinear_light, generated
from oracles import enumerate_optimum

GOLDEN = Path(__file__).parent / "golden"


def test_collinear_optimum():
    g, params = collinear()
    sol = brute_force(g, params)
    assert sol.total_cost == 60 and sol.num_routes == 1
    g, params = collinear_light(19.0)
    sol = brute_force(g, params)
    assert sol.total_cost == 100 and sol.num_routes == 2


def test_single_edge_optimum_is_init_route():
    g, params = generated(7, 1)
    model = RoutingModel(g, params, [g.depots[0]])
    assert brute_force(g, params).total_cost == init_route(model, 0, g.depots[0]).cost


def test_size_guard_and_infeasible():
    g, params = generated(0, 6)
    with pytest.raises(TooLarge):
        brute_force(g, params)
    g, params = collinear_light(5.0)
    with pytest.raises(InfeasibleInstance):
        brute_force(g, params)


@pytest.mark.parametrize("seed", range(12))
def test_oracle_matches_recursive_enumerator(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    g, params = generated(seed, m, depots=min(int(rng.integers(1, 3)), m + 1),
                          mode="explicit" if seed % 2 else "complete")
    params = params.with_(setup_cost=float(rng.uniform(0, 40)), capacity=float(rng.choice([math.inf, 700.0])))
    ref = enumerate_optimum(g, params, sorted(g.depots), shortest_deadhead(g))
    if not math.isfinite(ref):
        with pytest.raises(InfeasibleInstance):
            brute_force(g, params)
        return
    sol = brute_force(g, params)
    assert sol.total_cost == pytest.approx(ref, rel=1e-9)
    assert sorted(a >> 1 for r in sol.routes for a in r.arcs) == list(range(m))


@pytest.mark.parametrize("name,K", [("single_edge", 1), ("collinear", 2)])
def test_lp_golden(name, K):
    g, params, _ = parse_instance(GOLDEN / f"{name}.json")
    text = export_ilp_lp(g, params, K=K)
    assert text == (GOLDEN / f"{name}.lp").read_text()
    assert export_ilp_lp(g, params, K=K) == text


def _sections(text):
    out, cur = {}, None
    for line in text.splitlines():
        if line in ("Minimize", "Subject To", "Generals", "Binaries", "End"):
            cur = line
            out[cur] = []
        elif cur:
            out[cur].append(line)
    return out


@pytest.mark.parametrize("seed", range(4))
def test_lp_structure(seed):
    g, params = generated(seed, 4, mode="explicit" if seed % 2 else "complete")
    text = export_ilp_lp(g, params, K=2)
    sec = _sections(text)
    declared = set(" ".join(sec["Generals"] + sec["Binaries"]).split())
    body = " ".join(sec["Minimize"] + sec["Subject To"])
    used = set(re.findall(r"\b[sdz]_k\d+_e\d+_[fr]\b", body))
    assert used == declared
    n_edges = len(g.edges) if g.mode == "explicit" else len(g.edges) + g.n_vertices * (g.n_vertices - 1) // 2
    assert len(" ".join(sec["Binaries"]).split()) == 2 * 2 * len(g.required)
    assert len(" ".join(sec["Generals"]).split()) == 2 * 2 * 2 * n_edges
    names = re.findall(r"^ (\w+):", "\n".join(sec["Subject To"]), re.M)
    assert len(names) == len(set(names))


def test_lp_k_default_and_errors():
    g, params = collinear()
    text = export_ilp_lp(g, params)
    assert "s_k0_e0_f" in text and "_k1_" not in text
    with pytest.raises(ValueError):
        export_ilp_lp(g, params, K=0)
    with pytest.raises(TooManyVariables):
        export_ilp_lp(g, params, K=3, max_variables=10)


def test_lp_with_highs_matches_oracle(tmp_path):
    highspy = pytest.importorskip("highspy")
    cases = [collinear(), collinear_light(19.0)] + [generated(s, 3, mode="explicit") for s in range(3)]
    for g, params in cases:
        params = params.with_(setup_cost=0.0)
        ref = brute_force(g, params)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        path = tmp_path / "model.lp"
        path.write_text(export_ilp_lp(g, params, K=3))
        h.readModel(str(path))
        h.run()
        assert h.getInfo().objective_function_value == pytest.approx(ref.total_cost, rel=1e-6)
