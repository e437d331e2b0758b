"""Landmark-guided object-search simulator with a set-orienteering planner.

A robot searches a randomized multi-room workspace for a single target.
A long-range detector maps cells and spots landmarks; a short-range detector
confirms the target. The main planner treats the search as a budgeted
cluster-reward path problem over the incrementally observed landmark map,
balancing frontier exploration against touring known landmarks; frontier
exploration and exhaustive landmark touring serve as baselines. Batches are
scored by path-length-weighted success rate.
"""

from .errors import ConfigError, ContractError, InstanceTooLarge, NothingToPlan, SopnavError
from .harness import BenchmarkConfig, EpisodeResult, SplReport, compute_spl, run_benchmark
from .navgraph import NavGraph, SopInstance, all_pairs_costs, build_graph, make_sop_instance
from .planners import PlannerConfig, run_episode
from .sensing import BeliefMap, SensorConfig, frontier_clusters, sense
from .sop import SopSolution, solve_exact, solve_vns, validate
from .world import (
    EntityPlacement,
    Landmark,
    PlacementParams,
    Pose,
    WorldParams,
    Workspace,
    generate_workspace,
    line_of_sight,
    place_entities,
)

__version__ = "0.1.0"
