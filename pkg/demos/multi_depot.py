"""
Several depots
==============

How many depots does a network need, where should they go, and what do we
gain by letting every merge pick its depot instead of assigning edges to
their nearest depot up front?
"""
from dataclasses import replace

import numpy as np

import linecov as lc

graph, params, _ = lc.parse_instance(lc.gen_instance(seed=11, m=400, area=3000.0))
k = lc.suggest_depot_count(graph, params.capacity)
depots = lc.k_medoids_depots(graph, k, seed=0)
print("suggested depots:", k, "->", depots)

graph = replace(graph, depots=tuple(depots))
md = lc.solve_md_mem(graph, params)
base = lc.cluster_first_baseline(graph, params)
print("MD-MEM         : %3d routes, cost %.0f" % (md.num_routes, md.total_cost))
print("nearest depot  : %3d routes, cost %.0f" % (base.num_routes, base.total_cost))

# routes per depot
used = np.bincount([depots.index(r.depot) for r in md.routes], minlength=k)
for d, n in zip(depots, used):
    print("  depot %3d launches %d routes" % (d, n))
