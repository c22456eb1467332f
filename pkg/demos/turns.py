"""
Corners and turning radius
==========================

A fixed-wing style robot cannot stop on a dime.  At each corner it either
keeps going on a circular arc, slows down for a tighter arc, or stops and
rotates.  Between edges that do not touch it flies a Dubins curve.
"""
import math

import linecov as lc

params = lc.RobotParams(v_service=5.0, v_deadhead=10.0, omega_max=math.pi / 4, a_max=3.0, delta_max=2.0)

for deg in (170, 120, 90, 45, 10, 0):
    m = lc.smooth_turn(math.radians(deg), params.v_service, params, 50.0, 50.0)
    print("interior angle %3d deg: %-10s radius %6.2f speed %5.2f penalty %.2f s"
          % (deg, m.kind, m.radius, m.turn_speed, m.penalty))

length, path = lc.dubins_path(lc.Pose(0, 0, 0), lc.Pose(0, 20, math.pi), 10.0 / (math.pi / 4))
print("U-turn via %s, length %.2f" % (path.word, length))

graph, gparams, _ = lc.parse_instance(lc.gen_instance(seed=6, m=40, depot_count=2, mode="explicit"))
gparams = gparams.with_(omega_max=0.3)
smooth = lc.solve_md_mem_turns(graph, gparams)
dubins = lc.solve_md_mem_turns(graph, gparams, smooth=False)
holo = lc.solve_md_mem(graph, gparams)
print("ignoring turns : %.0f" % holo.total_cost)
print("Dubins only    : %.0f" % dubins.total_cost)
print("smooth corners : %.0f" % smooth.total_cost)
