import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import linecov.turns as turns
from linecov.cost_model import RobotParams
from linecov.errors import GeometryError
from linecov.exact import brute_force
from linecov.graph import build_graph
from linecov.multidepot import solve_md_mem
from linecov.routes import expand_path
from linecov.turns import (Pose, TurnRoutingModel, TurnWarning, corner_maneuver, depot_leg_cost, dubins_lengths,
                           dubins_path, smooth_arc_points, smooth_turn, solve_md_mem_turns, turn_cost_between_arcs)
from conftest import generated
from oracles import dubins_oracle, enumerate_optimum, simulate_corner

SLOW = RobotParams(v_service=5.0, v_deadhead=10.0, omega_max=math.pi / 4, a_max=3.0, delta_max=2.0)


def test_straight_and_reversal():
    m = smooth_turn(math.pi, 5.0, SLOW)
    assert (m.kind, m.duration, m.deviation, m.penalty) == ("none", 0.0, 0.0, 0.0)
    m = smooth_turn(0.0, 5.0, SLOW, 50, 50)
    assert m.kind == "stop-turn" and m.turn_speed == 0.0
    assert m.duration == pytest.approx(4.0)


def test_right_angle_decel_arc():
    m = smooth_turn(math.pi / 2, 5.0, SLOW)
    r_cruise = 5.0 / (math.pi / 4)
    assert turns.corner_deviation(r_cruise, math.pi / 2) == pytest.approx(2.637, abs=1e-3)
    assert m.kind == "decel-arc"
    assert m.radius == pytest.approx(2 * math.sin(math.pi / 4) / (1 - math.sin(math.pi / 4)))
    assert m.radius == pytest.approx(4.828, abs=1e-3)
    assert m.turn_speed == pytest.approx(3.792, abs=1e-3)
    assert m.deviation == pytest.approx(2.0)


def test_wide_corner_keeps_speed():
    m = smooth_turn(2.8, 5.0, SLOW)
    assert m.kind == "smooth-arc" and m.turn_speed == 5.0 and m.deviation <= 2.0


def test_invalid_angles():
    for bad in (-0.1, math.pi + 0.1, float("nan")):
        with pytest.raises(GeometryError):
            smooth_turn(bad, 5.0, SLOW)


def test_short_edge_stop_warns():
    with pytest.warns(TurnWarning):
        m = smooth_turn(0.05, 10.0, SLOW, 3.0, 3.0)
    assert m.kind == "stop-turn"


def _arc_deviation(theta, radius, n=4001):
    # corner at the origin, incoming edge along +x
    d_in = np.array([1.0, 0.0])
    d_out = np.array([math.cos(math.pi - theta), math.sin(math.pi - theta)])
    pts = smooth_arc_points((0.0, 0.0), d_in, d_out, radius, theta, n)
    return np.hypot(pts[:, 0], pts[:, 1]).min(), pts, d_in, d_out


def test_sampled_deviation_within_limit():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        theta = rng.uniform(0.05, math.pi - 0.01)
        v = rng.uniform(1, 20)
        params = SLOW.with_(delta_max=rng.uniform(0.2, 5), omega_max=rng.uniform(0.2, 2), a_max=rng.uniform(0.5, 5))
        m = smooth_turn(theta, v, params, rng.uniform(5, 500), rng.uniform(5, 500))
        if m.kind in ("smooth-arc", "decel-arc"):
            dev, pts, d_in, d_out = _arc_deviation(theta, m.radius)
            assert dev <= params.delta_max + 1e-6
            worst = max(worst, dev - params.delta_max)
            # tangency: the arc starts on the incoming edge and ends on the outgoing one
            off = m.radius / math.tan(theta / 2)
            np.testing.assert_allclose(pts[0], -off * d_in, atol=1e-9)
            np.testing.assert_allclose(pts[-1], off * d_out, atol=1e-9)
    assert worst <= 1e-6


CORNERS = [(0.3, 10.0, 20.0), (0.8, 6.0, 40.0), (1.2, 5.0, 15.0), (math.pi / 2, 5.0, 30.0), (2.0, 8.0, 12.0),
           (2.5, 3.0, 20.0), (0.1, 7.0, 25.0), (1.0, 9.0, 14.0), (0.6, 4.0, 5.0)]


@pytest.mark.parametrize("theta,v,h", CORNERS)
def test_penalty_matches_simulated_profile(theta, v, h):
    m = smooth_turn(theta, v, SLOW, h, h)
    if m.kind == "stop-turn" and v * v / (2 * SLOW.a_max) > h:
        pytest.skip("robot cannot stop within the half edge")
    t, brake_start = simulate_corner(theta, v, m.turn_speed, m.radius, SLOW.omega_max, SLOW.a_max, h, h)
    straight = 2 * h / v
    assert m.penalty == pytest.approx(max(0.0, t - straight), abs=2e-3)
    # braking starts after the incoming midpoint
    assert brake_start >= -1e-9


@given(st.floats(0.02, math.pi - 0.02), st.floats(1, 15), st.floats(1, 200), st.floats(1, 200))
@settings(max_examples=200, deadline=None)
def test_penalty_and_speed_bounds(theta, v, h1, h2):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TurnWarning)
        m = smooth_turn(theta, v, SLOW, h1, h2)
    assert m.penalty >= 0
    assert 0 <= m.turn_speed <= v
    assert m.deviation <= SLOW.delta_max + 1e-9


def test_dubins_examples():
    assert dubins_path(Pose(0, 0, 0), Pose(5, 0, 0), 2.5)[0] == pytest.approx(5.0)
    length, path = dubins_path(Pose(0, 0, 0), Pose(0, 2, math.pi), 1.0)
    assert length == pytest.approx(math.pi)
    assert path.word in ("LSL", "LRL")
    assert dubins_path(Pose(1, 1, 0.3), Pose(1, 1, 0.3), 3.0)[0] == 0.0


def test_dubins_against_oracle():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        s = (*rng.uniform(-20, 20, 2), rng.uniform(-math.pi, math.pi))
        e = (*rng.uniform(-20, 20, 2), rng.uniform(-math.pi, math.pi))
        r = rng.uniform(0.5, 6)
        got = dubins_path(Pose(*s), Pose(*e), r)[0]
        ref = dubins_oracle(s, e, r)
        worst = max(worst, abs(got - ref) / ref)
        assert got >= math.hypot(e[0] - s[0], e[1] - s[1]) - 1e-9
    assert worst <= 1e-3


@settings(max_examples=300, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-4, 4), st.floats(-100, 100), st.floats(-100, 100),
       st.floats(-4, 4), st.floats(0.1, 30))
def test_dubins_at_least_euclidean(x0, y0, h0, x1, y1, h1, r):
    length, _ = dubins_lengths(x0, y0, h0, x1, y1, h1, r)
    assert length >= math.hypot(x1 - x0, y1 - y0) * (1 - 1e-12) - 1e-9


def test_dubins_samples_follow_the_path():
    _, path = dubins_path(Pose(0, 0, 0), Pose(-3, 10, 2.0), 4.0)
    pts = path.sample(0.5)
    end = pts[-1]
    assert end == pytest.approx((-3, 10), abs=1e-9)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    assert seg.sum() <= path.length + 1e-9


def _turn_graph(points, edges, depots=(0,), params=SLOW):
    verts = [{"id": i, "x": float(x), "y": float(y)} for i, (x, y) in enumerate(points)]
    es = [{"id": i, "tail": a, "head": b, "required": True} for i, (a, b) in enumerate(edges)]
    return build_graph({"vertices": verts, "edges": es, "depots": list(depots), "mode": "complete"}, params)


def test_collinear_adjacent_arcs_are_free():
    g = _turn_graph([(0, 0), (10, 0), (20, 0)], [(0, 1), (1, 2)])
    assert turn_cost_between_arcs((0, False), (1, False), g, SLOW) == 0.0


def test_right_angle_corner_penalty():
    g = _turn_graph([(0, 0), (60, 0), (60, 60)], [(0, 1), (1, 2)])
    cost, man, path = corner_maneuver(g, (0, False), (1, False), SLOW)
    assert man.kind == "decel-arc" and path is None and cost > 0
    t, _ = simulate_corner(math.pi / 2, 5.0, man.turn_speed, man.radius, SLOW.omega_max, SLOW.a_max, 30, 30)
    assert cost == pytest.approx(t - 60 / 5.0, abs=2e-3)


def test_parallel_u_turn():
    r = SLOW.v_deadhead / SLOW.omega_max
    g = _turn_graph([(0, 0), (50, 0), (50, 2 * r), (0, 2 * r)], [(0, 1), (2, 3)])
    cost = turn_cost_between_arcs((0, False), (1, False), g, SLOW)
    assert cost == pytest.approx(math.pi * r / SLOW.v_deadhead)


def test_depot_legs():
    g = _turn_graph([(0, 0), (10, 0), (-7, 0), (0, -30)], [(0, 1)], depots=(0, 2, 3))
    assert depot_leg_cost(0, (0, False), g, SLOW) == 0.0
    assert depot_leg_cost(2, (0, False), g, SLOW) == pytest.approx(7 / SLOW.v_deadhead)
    p = SLOW.with_(depot_headings={3: math.pi})
    assert depot_leg_cost(3, (0, False), g, p) >= 30 / SLOW.v_deadhead
    ref = dubins_oracle((0, -30, math.pi), (0, 0, 0), SLOW.v_deadhead / SLOW.omega_max)
    assert depot_leg_cost(3, (0, False), g, p) == pytest.approx(ref / SLOW.v_deadhead, rel=1e-9)


def test_self_loops_rejected():
    doc = {"vertices": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 5, "y": 0}],
            "edges": [{"id": 0, "tail": 0, "head": 1, "required": True},
                      {"id": 1, "tail": 1, "head": 1, "required": True, "service_cost_fwd": 1, "service_cost_rev": 1,
                       "service_demand_fwd": 1, "service_demand_rev": 1}],
            "depots": [0], "mode": "complete"}
    g = build_graph(doc, SLOW)
    with pytest.raises(GeometryError):
        TurnRoutingModel(g, SLOW)


def test_turn_cost_is_constant_work():
    g, params = generated(3, 30)
    turns.geometry_evaluations = 0
    turn_cost_between_arcs((0, False), (1, True), g, params)
    one = turns.geometry_evaluations
    for a in range(2, 30):
        turns.geometry_evaluations = 0
        turn_cost_between_arcs((a - 1, False), (a, False), g, params)
        assert turns.geometry_evaluations <= max(one, 2)


def test_model_links_match_scalar_function():
    g, params = generated(8, 12)
    model = TurnRoutingModel(g, params)
    rng = np.random.default_rng(0)
    for _ in range(100):
        a1, a2 = rng.integers(0, 24, 2)
        if a1 >> 1 == a2 >> 1:
            continue
        ref = turn_cost_between_arcs(model.arc(a1), model.arc(a2), g, params)
        assert model.link_cost[a1, a2] == pytest.approx(ref, rel=1e-9, abs=1e-12)
        for i, d in enumerate(model.depots):
            assert model.out_cost[i, a1] == pytest.approx(depot_leg_cost(int(d), model.arc(a1), g, params))
            assert model.in_cost[i, a2] == pytest.approx(depot_leg_cost(int(d), model.arc(a2), g, params, True))


def test_collinear_chain_only_pays_for_the_return():
    params = SLOW.with_(capacity=math.inf)
    g = _turn_graph([(0, 0), (10, 0), (20, 0), (30, 0)], [(0, 1), (1, 2), (2, 3)], params=params)
    turn = solve_md_mem_turns(g, params)
    holo = solve_md_mem(g, params)
    assert turn.num_routes == holo.num_routes == 1
    ret, _ = dubins_path(Pose(30, 0, 0), Pose(0, 0, 0), params.v_deadhead / params.omega_max)
    assert turn.total_cost == pytest.approx(holo.total_cost - 30 / params.v_deadhead + ret / params.v_deadhead)
    steps = turn.steps[0]
    assert [s.mode for s in steps] == ["service"] * 3 + ["deadhead"]


def test_triangle_smooth_not_worse():
    g = _turn_graph([(0, 0), (40, 0), (20, 30), (0, -5)], [(0, 1), (1, 2), (2, 0)], depots=(3,))
    a = solve_md_mem_turns(g, SLOW)
    b = solve_md_mem_turns(g, SLOW, smooth=False)
    assert a.total_cost <= b.total_cost + 1e-9
    assert a.algorithm == "md-mem-turns" and b.algorithm == "md-mem-dubins"


@pytest.mark.parametrize("seed", range(12))
def test_small_instances_match_turn_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 3))
    g, params = generated(seed, m, depots=min(int(rng.integers(1, 3)), m + 1))
    smooth = bool(seed % 2)
    sol = solve_md_mem_turns(g, params, smooth=smooth)
    ref = enumerate_optimum(g, params, sorted(g.depots), turn_aware=True, smooth=smooth)
    assert sol.total_cost == pytest.approx(ref, rel=1e-6)
    bf = brute_force(g, params, turn_aware=True, smooth=smooth)
    assert bf.total_cost == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_expanded_steps_sum_to_route_cost(seed):
    g, params = generated(seed, 15, depots=2)
    params = params.with_(setup_cost=4.0)
    model = TurnRoutingModel(g, params)
    sol = solve_md_mem_turns(g, params, model=model)
    for r, steps in zip(sol.routes, sol.steps):
        assert math.fsum(s.cost for s in steps) + 4.0 == pytest.approx(r.cost, rel=1e-6)
        assert [s for s in expand_path(model, r)] == steps
