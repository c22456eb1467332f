"""
Checking against the optimum
============================

For a handful of required edges every partition, order, direction and
depot can be enumerated.  Larger cases can go to a MIP solver through the
exported LP file.
"""
import tempfile
from pathlib import Path

import linecov as lc

graph, params, _ = lc.parse_instance(lc.gen_instance(seed=4, m=4, depot_count=2))
params = params.with_(setup_cost=20.0)
opt = lc.brute_force(graph, params)
heur = lc.solve_md_mem(graph, params)
print("optimum %.2f with %d routes" % (opt.total_cost, opt.num_routes))
print("MD-MEM  %.2f with %d routes (gap %.2f%%)"
      % (heur.total_cost, heur.num_routes, 100 * (heur.total_cost / opt.total_cost - 1)))

lp = lc.export_ilp_lp(graph, params.with_(setup_cost=0.0), K=3)
path = Path(tempfile.mkdtemp()) / "model.lp"
path.write_text(lp)
print("LP file: %d lines -> %s" % (lp.count("\n"), path))

try:
    import highspy
except ImportError:
    print("highspy not installed; skipping the solve")
else:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(path))
    h.run()
    ref = lc.brute_force(graph, params.with_(setup_cost=0.0)).total_cost
    print("HiGHS %.2f, enumeration %.2f" % (h.getInfo().objective_function_value, ref))
