"""
Planning coverage routes from one depot
=======================================

A random road-like network is generated, every required edge becomes its
own route, and MEM merges them greedily.  The solver holds a feasible
plan at every step, so we can watch the total cost fall.
"""
import tempfile
from pathlib import Path

import linecov as lc

doc = lc.gen_instance(seed=3, m=60)
graph, params, wind = lc.parse_instance(doc)
print("required edges:", len(graph.required), " depot:", graph.depots[0])

# step through the merges by hand
model = lc.RoutingModel(graph, params, [graph.depots[0]])
state = lc.mem_state(model)
print("start: %d routes, cost %.1f" % (len(state.live_routes), state.total_cost))
while True:
    report = state.step()
    if report is None:
        break
    if state.merges % 10 == 0:
        print("after %2d merges: %2d routes, cost %.1f" % (state.merges, len(state.live_routes), state.total_cost))

sol = state.extract_solution()
print("final: %d routes, cost %.1f" % (sol.num_routes, sol.total_cost))

# each route respects the capacity (flight time here)
for r in sol.routes:
    print("  route %d: %2d edges, demand %.0f of %.0f" % (r.id, len(r.arcs), r.demand, params.capacity))

# the one-call API gives the same answer
assert lc.solve_mem(graph, params).total_cost == sol.total_cost

out = Path(tempfile.mkdtemp()) / "plan.json"
lc.write_solution(sol, out, ["json", "geojson", "svg"], graph=graph, params=params)
print("wrote", sorted(p.name for p in out.parent.iterdir()))
