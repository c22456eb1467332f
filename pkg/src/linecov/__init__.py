"""Multi-robot line coverage: Merge-Embed-Merge route construction."""
from .cost_model import RobotParams, WindModel, effective_speed, populate_costs, travel_time
from .errors import (DisconnectedGraph, GeometryError, GraphError, InfeasibleEdge, InfeasibleInstance,
                     KTooLarge, LinecovError, MissingServiceValues, NegativeCost, SchemaError, TooLarge,
                     TooManyVariables, UnreachablePair, WindExceedsAirspeed)
from .exact import OracleLimits, brute_force, export_ilp_lp
from .graph import (Arc, DeadheadMatrices, Edge, Graph, add_point_features, build_graph, shortest_deadhead,
                    validate_instance)
from .io import gen_instance, import_geojson, load_solution, parse_instance, write_instance, write_solution
from .mem import SolverState, mem_state, solve_mem
from .multidepot import (cluster_first_baseline, k_medoids_depots, md_initialize, solve_md_mem,
                         suggest_depot_count)
from .routes import (MergePermutation, Route, RoutingModel, SavingsEntry, Solution, Step, best_merge,
                     expand_path, init_route, merge, reverse)
from .turns import (Pose, TurnManeuver, TurnRoutingModel, depot_leg_cost, dubins_path, smooth_turn,
                    solve_md_mem_turns, turn_cost_between_arcs)

__all__ = [name for name in dir() if not name.startswith("_")]
