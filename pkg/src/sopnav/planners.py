"""Episode-level decision policies and the move-sense loop.

Three planners share one episode harness:

* ``sop``: the variable-horizon orienteering planner. It rebuilds the
  viewpoint graph whenever the map gains a landmark (or the current plan runs
  out), folds frontier clusters in as scalarized exploration rewards, solves
  the resulting instance (exact when small, VNS otherwise) and walks the plan.
* ``frontier``: classical nearest-frontier exploration, ignoring landmarks.
* ``tsp``: tours every observed unvisited landmark viewpoint along a
  nearest-neighbor + 2-opt path, ignoring any budget.

All planners read only the belief map. Once the target has been sighted the
episode loop drives straight at it regardless of planner; success requires a
short-range detection plus closing to within one cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, sop
from .errors import ConfigError, ContractError, NothingToPlan
from .kernels import KNOWN_FREE
from .navgraph import SopInstance, build_graph, frontier_cluster_id, make_sop_instance
from .sensing import (
    BeliefMap,
    SensorConfig,
    frontier_clusters,
    scan_frontier_clusters,
    sense,
)
from .world import EntityPlacement, Pose, Workspace

PLANNERS = ("sop", "frontier", "tsp")

SQRT2 = math.sqrt(2.0)


class UnreachableWaypoint(ContractError):
    pass


@dataclass
class PlannerConfig:
    short_range_m: float = 3.0  # viewpoint radius, mirrors the short-range sensor
    step_cap: int = 0  # filled in by run_episode; bounds the planning budget
    explore_weight: float = 0.5
    budget_horizon_m: float | None = None  # per-plan budget cap; None = remaining steps only
    scan_station_spacing_m: float = 100.0  # lattice pitch of discovery goals (~ long range)
    replan_on_new_landmark: bool = True
    replan_on_exhaustion: bool = True
    exact_cluster_limit: int = 7
    vns_iters: int = 60
    solver_seed: int = 0


@dataclass
class PlanState:
    instance: SopInstance
    solution: sop.SopSolution
    waypoints: list[tuple[int, int]]
    clusters: list[int]
    anchors: list[tuple[int, int] | None]  # exploration goal cells; None for landmarks
    explore_kind: str = "scan"  # which boundary the pseudo-clusters came from
    idx: int = 0


@dataclass
class EpisodeState:
    belief: BeliefMap
    robot_cell: tuple[int, int]
    traveled_m: float = 0.0
    step: int = 0
    plan: PlanState | None = None
    plan_stale: bool = False
    replan_count: int = 0
    pending_new_landmarks: bool = False
    frontier_waypoint: tuple[int, int] | None = None
    tsp_tour: list[tuple[int, int]] | None = None
    tsp_clusters: list[int] = field(default_factory=list)
    tsp_idx: int = 0
    tsp_planned_for: frozenset[int] = frozenset()
    path: list[tuple[int, int]] | None = None
    path_idx: int = 0
    path_target: tuple[int, int] | None = None
    trajectory: list[tuple[int, float, float, str]] = field(default_factory=list)

    @property
    def robot(self) -> Pose:
        res = self.belief.resolution_m
        r, c = self.robot_cell
        return Pose((c + 0.5) * res, (r + 0.5) * res)


@dataclass(frozen=True)
class EpisodeEvent:
    moved_m: float
    observation: object  # ObservationEvent from the sense call


def _within_short_range(state: EpisodeState, landmark_id: int, short_range_m: float) -> bool:
    """Robot is within the short range of the landmark with a clear sightline
    on the known map; standing on the far side of a wall does not count."""
    ol = state.belief.observed[landmark_id]
    res = state.belief.resolution_m
    lr, lc = int(ol.pose.y_m / res), int(ol.pose.x_m / res)
    rr, rc = state.robot_cell
    if (rr - lr) ** 2 + (rc - lc) ** 2 > (short_range_m / res) ** 2:
        return False
    return bool(
        kernels.line_of_sight_cells(state.belief.known_wall_mask(), rr, rc, lr, lc)
    )


def _consume_plan_arrivals(state: EpisodeState, cfg: PlannerConfig):
    """Advance past plan waypoints that are reached or have gone stale
    (landmark checked en route, or the chased frontier dissolved)."""
    plan = state.plan
    while plan and plan.idx < len(plan.waypoints):
        wp = plan.waypoints[plan.idx]
        cid = plan.clusters[plan.idx]
        if state.robot_cell == wp:
            if cid >= 0 and cid in state.belief.observed and _within_short_range(
                state, cid, cfg.short_range_m
            ):
                # a true viewpoint was reached: that landmark area is checked
                state.belief.visited.add(cid)
            plan.idx += 1
            continue
        if cid >= 0 and cid in state.belief.visited:
            plan.idx += 1
            continue
        if cid <= -2:
            anchor = plan.anchors[plan.idx]
            if plan.explore_kind == "scan":
                # goal achieved from afar once the long-range disk swallows it;
                # the rest of the plan stays valid, just move on
                if anchor is not None and state.belief.scanned[anchor] != 0:
                    plan.idx += 1
                    continue
            elif not _frontier_cells_near(state.belief.known, wp, 5):
                # the chased map frontier dissolved; the rest of the plan was
                # costed against a map that no longer exists
                plan.idx += 1
                state.plan_stale = True
                continue
        break


def sop_step(state: EpisodeState, cfg: PlannerConfig) -> tuple[int, int] | None:
    """Next waypoint of the variable-horizon orienteering planner.

    Replans when there is no usable plan, the plan ran out, or new landmarks
    entered the map since the last solve. Returns None when nothing remains
    to visit or explore.
    """
    guard = len(state.belief.observed) + 2
    for _ in range(guard):
        _consume_plan_arrivals(state, cfg)
        plan = state.plan
        triggered = (state.pending_new_landmarks and cfg.replan_on_new_landmark) or (
            state.plan_stale and cfg.replan_on_exhaustion
        )
        exhausted = plan is None or plan.idx >= len(plan.waypoints)
        if not triggered and not exhausted:
            return plan.waypoints[plan.idx]
        if exhausted and plan is not None and not triggered and not cfg.replan_on_exhaustion:
            return None
        state.pending_new_landmarks = False
        state.plan_stale = False
        if not _replan(state, cfg):
            return None
    return None


def _solve_instance(inst: SopInstance, cfg: PlannerConfig, seed: int) -> sop.SopSolution:
    if len(inst.non_start_clusters()) <= cfg.exact_cluster_limit:
        return sop.solve_exact(inst, cfg.exact_cluster_limit)
    return sop.solve_vns(inst, seed=seed, iters=cfg.vns_iters)


def _replan(state: EpisodeState, cfg: PlannerConfig) -> bool:
    res = state.belief.resolution_m
    remaining = (cfg.step_cap - state.step) * res
    if remaining <= 0:
        return False
    budget = remaining
    if cfg.budget_horizon_m is not None:
        # a short horizon makes reward-per-cost bite: the plan grabs the most
        # promising clusters first and later replans extend the tour
        budget = min(remaining, cfg.budget_horizon_m)
    spacing = max(4, int(round(cfg.scan_station_spacing_m / state.belief.resolution_m)))
    # exploration side: sweep the scan-station lattice while stations remain,
    # then fall back to map frontiers (rooms still hiding their insides)
    attempts = (
        ("scan", _scan_stations(state.belief, spacing)),
        ("map", frontier_clusters(state.belief)),
    )
    state.replan_count += 1
    seed = cfg.solver_seed + state.replan_count
    for explore_kind, frontier in attempts:
        graph = build_graph(state.belief, state.robot, cfg.short_range_m, frontier)
        # the horizon must never hide the most promising landmark: stretch
        # the budget so the top-relevance cluster stays inside the plan
        plan_budget = budget
        best = None
        for nd in graph.nodes[1:]:
            if nd.cluster_id >= 0:
                key = (nd.reward, -graph.cost[0, nd.node_id])
                if best is None or key > best[0]:
                    best = (key, graph.cost[0, nd.node_id])
        if best is not None and np.isfinite(best[1]):
            plan_budget = min(remaining, max(plan_budget, 1.2 * best[1]))
        try:
            inst = make_sop_instance(graph, plan_budget, frontier, cfg.explore_weight)
        except NothingToPlan:
            continue
        solution = _solve_instance(inst, cfg, seed)
        if len(solution.path) <= 1 and plan_budget < remaining:
            # everything lies beyond the horizon; fall back to the full budget
            inst = make_sop_instance(graph, remaining, frontier, cfg.explore_weight)
            solution = _solve_instance(inst, cfg, seed)
        if len(solution.path) <= 1:
            continue
        anchors_by_cluster = {
            frontier_cluster_id(k): fc.anchor for k, fc in enumerate(frontier)
        }
        waypoints = [graph.nodes[int(inst.node_ids[i])].cell for i in solution.path[1:]]
        clusters = [int(inst.cluster_ids[i]) for i in solution.path[1:]]
        anchors = [anchors_by_cluster.get(cid) for cid in clusters]
        state.plan = PlanState(inst, solution, waypoints, clusters, anchors, explore_kind)
        return True
    return False


def _scan_stations(belief: BeliefMap, spacing_cells: int) -> list:
    """Unscanned vantage stations on a fixed lattice.

    Visiting every station sweeps the whole workspace with the long-range
    detector; the solver orders the remaining ones into an efficient
    discovery tour. A station dissolves once the scan disk swallows it."""
    from .sensing import FrontierCluster  # local import to avoid cycle noise

    H, W = belief.known.shape
    res = belief.resolution_m
    out = []
    for r in range(spacing_cells // 2, H, spacing_cells):
        for c in range(spacing_cells // 2, W, spacing_cells):
            if belief.scanned[r, c]:
                continue
            out.append(
                FrontierCluster(
                    centroid=Pose((c + 0.5) * res, (r + 0.5) * res),
                    size=1,
                    cells=np.array([[r, c]], dtype=np.int64),
                    anchor=(r, c),
                )
            )
    return out


def _frontier_cells_near(known: np.ndarray, cell: tuple[int, int], radius: int) -> bool:
    r, c = cell
    H, W = known.shape
    r0, r1 = max(0, r - radius - 1), min(H, r + radius + 2)
    c0, c1 = max(0, c - radius - 1), min(W, c + radius + 2)
    window = kernels.frontier_mask(known[r0:r1, c0:c1])
    # the window slightly overshoots the radius at its rim; close enough for
    # deciding whether the chased frontier has dissolved
    return bool(window.any())


def frontier_step(state: EpisodeState) -> tuple[int, int] | None:
    """Head for the nearest frontier cluster; retarget once it dissolves.

    Returns None when no reachable frontier remains (exploration exhausted).
    """
    wp = state.frontier_waypoint
    if wp is not None:
        if state.robot_cell == wp or not _frontier_cells_near(state.belief.known, wp, 5):
            wp = None
    if wp is None:
        clusters = frontier_clusters(state.belief)
        if not clusters:
            state.frontier_waypoint = None
            return None
        dist, _ = kernels.dijkstra_field(
            state.belief.known_free_mask(), state.robot_cell[0], state.robot_cell[1]
        )
        best_key = None
        best_anchor = None
        for fc in clusters:
            d = float(dist[fc.anchor])
            if not np.isfinite(d):
                continue
            key = (d, fc.centroid.y_m, fc.centroid.x_m)
            if best_key is None or key < best_key:
                best_key = key
                best_anchor = fc.anchor
        if best_anchor is None:
            state.frontier_waypoint = None
            return None
        wp = best_anchor
    state.frontier_waypoint = wp
    return wp


def _tour_cost(C, order) -> float:
    cost = 0.0
    for a, b in zip(order, order[1:]):
        cost += C[a][b]
    return cost


def tsp_step(state: EpisodeState, cfg: PlannerConfig) -> tuple[int, int] | None:
    """Tour all observed unvisited landmark viewpoints, cheapest-first.

    Falls back to frontier exploration while no landmark is known. Replans
    whenever the set of unvisited observed landmarks changes.
    """
    while True:
        unvisited = frozenset(state.belief.unvisited_observed())
        if not unvisited:
            return frontier_step(state)
        if state.tsp_tour is not None and state.tsp_planned_for == unvisited:
            while state.tsp_idx < len(state.tsp_tour) and state.robot_cell == state.tsp_tour[state.tsp_idx]:
                cid = state.tsp_clusters[state.tsp_idx]
                if cid in state.belief.observed and _within_short_range(
                    state, cid, cfg.short_range_m
                ):
                    state.belief.visited.add(cid)
                state.tsp_idx += 1
            if state.tsp_idx < len(state.tsp_tour):
                return state.tsp_tour[state.tsp_idx]
            state.tsp_tour = None
            continue

        graph = build_graph(state.belief, state.robot, cfg.short_range_m)
        members: dict[int, list[int]] = {}
        for nd in graph.nodes:
            if nd.cluster_id >= 0:
                members.setdefault(nd.cluster_id, []).append(nd.node_id)
        if not members:
            return frontier_step(state)
        C = graph.cost.tolist()
        order = [graph.start_node]
        left = sorted(members)
        while left:  # nearest neighbor over clusters, best member node each
            last = order[-1]
            pick = min(
                ((C[last][v], cid, v) for cid in left for v in members[cid]),
                key=lambda t: t,
            )
            order.append(pick[2])
            left.remove(pick[1])
        improved = True
        while improved:  # 2-opt on the visit order, start pinned
            improved = False
            base = _tour_cost(C, order)
            n = len(order)
            for i in range(1, n - 1):
                for j in range(i + 1, n):
                    cand = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
                    if _tour_cost(C, cand) < base - 1e-12:
                        order = cand
                        improved = True
                        base = _tour_cost(C, order)
        state.tsp_tour = [graph.nodes[v].cell for v in order[1:]]
        state.tsp_clusters = [graph.nodes[v].cluster_id for v in order[1:]]
        state.tsp_idx = 0
        state.tsp_planned_for = unvisited
        if not state.tsp_tour:
            return frontier_step(state)
        return state.tsp_tour[0]


def advance(
    state: EpisodeState,
    waypoint: tuple[int, int],
    ws: Workspace,
    placement: EntityPlacement,
    sensors: SensorConfig,
) -> EpisodeEvent:
    """Move one grid step toward the waypoint (over known-free cells), then
    sense. Raises UnreachableWaypoint when no known path exists."""
    res = ws.resolution_m
    moved = 0.0
    if waypoint != state.robot_cell:
        fresh = (
            state.path is None
            or state.path_target != waypoint
            or state.path_idx + 1 >= len(state.path)
            or state.path[state.path_idx] != state.robot_cell
        )
        if fresh:
            _, parent = kernels.dijkstra_field(
                state.belief.known_free_mask(), state.robot_cell[0], state.robot_cell[1]
            )
            cells = kernels.extract_path(
                parent, state.robot_cell[0], state.robot_cell[1], waypoint[0], waypoint[1]
            )
            if not cells:
                raise UnreachableWaypoint(f"no known-free path to waypoint {waypoint}")
            state.path = cells
            state.path_idx = 0
            state.path_target = waypoint
        nxt = state.path[state.path_idx + 1]
        diag = nxt[0] != state.robot_cell[0] and nxt[1] != state.robot_cell[1]
        moved = (SQRT2 if diag else 1.0) * res
        state.robot_cell = nxt
        state.path_idx += 1
        state.traveled_m += moved

    state.step += 1
    sighted_before = state.belief.target_found is not None
    confirmed_before = state.belief.target_confirmed
    visited_before = len(state.belief.visited)
    obs = sense(ws, placement, state.belief, state.robot, sensors)
    if obs.new_landmarks:
        state.pending_new_landmarks = True

    tags = []
    if obs.new_landmarks:
        tags.append("observed:" + "+".join(str(i) for i in obs.new_landmarks))
    if not sighted_before and state.belief.target_found is not None:
        tags.append("sighted")
    if not confirmed_before and state.belief.target_confirmed:
        tags.append("detected")
    if len(state.belief.visited) != visited_before:
        tags.append("visited:" + "+".join(str(i) for i in sorted(state.belief.visited)))
    pose = state.robot
    state.trajectory.append((state.step, pose.x_m, pose.y_m, ";".join(tags)))
    return EpisodeEvent(moved, obs)


@dataclass
class EpisodeOutcome:
    success: bool
    traveled_m: float
    steps: int
    reason: str
    trajectory: list[tuple[int, float, float, str]]
    visited_landmarks: frozenset[int]


def default_step_cap(ws: Workspace) -> int:
    H, W = ws.shape
    return 4 * 2 * (H + W)


def _target_reached(state: EpisodeState, target_cell: tuple[int, int]) -> bool:
    if not state.belief.target_confirmed:
        return False
    dr = abs(state.robot_cell[0] - target_cell[0])
    dc = abs(state.robot_cell[1] - target_cell[1])
    return max(dr, dc) <= 1


def run_episode(
    ws: Workspace,
    placement: EntityPlacement,
    sensors: SensorConfig,
    planner: str = "sop",
    cfg: PlannerConfig | None = None,
    step_cap: int | None = None,
) -> EpisodeOutcome:
    """Simulate one search episode under the chosen planner."""
    if planner not in PLANNERS:
        raise ConfigError(f"unknown planner {planner!r}; choose one of {PLANNERS}")
    cfg = cfg or PlannerConfig(short_range_m=sensors.short_range_m)
    if step_cap is None:
        step_cap = default_step_cap(ws)
    cfg.step_cap = step_cap

    belief = BeliefMap.blank(ws)
    start_cell = ws.pose_to_cell(placement.start)
    state = EpisodeState(belief=belief, robot_cell=start_cell)
    target_cell = ws.pose_to_cell(placement.target)

    first_obs = sense(ws, placement, belief, state.robot, sensors)
    start_tags = ["start"]
    if first_obs.new_landmarks:
        start_tags.append("observed:" + "+".join(str(i) for i in first_obs.new_landmarks))
    if belief.target_found is not None:
        start_tags.append("sighted")
    state.trajectory.append((0, state.robot.x_m, state.robot.y_m, ";".join(start_tags)))

    approach_retry_at = 0
    reason = "step_cap"
    success = False
    while state.step < step_cap:
        if _target_reached(state, target_cell):
            success = True
            reason = "success"
            break

        waypoint = None
        if belief.target_found is not None and state.step >= approach_retry_at:
            try_cell = ws.pose_to_cell(belief.target_found)
            if belief.known[try_cell] == KNOWN_FREE:
                if state.path_target == try_cell and state.step % 15 == 0:
                    state.path = None  # pick up shortcuts the map revealed en route
                try:
                    advance(state, try_cell, ws, placement, sensors)
                    continue
                except UnreachableWaypoint:
                    # sighted through a wall; keep exploring until a route opens
                    approach_retry_at = state.step + 25
            else:
                approach_retry_at = state.step + 25

        if planner == "sop":
            waypoint = sop_step(state, cfg)
        elif planner == "frontier":
            waypoint = frontier_step(state)
        else:
            waypoint = tsp_step(state, cfg)
        if waypoint is None:
            reason = "exhausted"
            break
        try:
            advance(state, waypoint, ws, placement, sensors)
        except UnreachableWaypoint as exc:
            reason = f"unreachable_waypoint: {exc}"
            break

    if not success and _target_reached(state, target_cell):
        success = True
        reason = "success"
    state.trajectory.append(
        (state.step, state.robot.x_m, state.robot.y_m, "success" if success else f"fail:{reason}")
    )
    return EpisodeOutcome(
        success=success,
        traveled_m=state.traveled_m,
        steps=state.step,
        reason=reason,
        trajectory=state.trajectory,
        visited_landmarks=frozenset(belief.visited),
    )


def trajectory_to_csv(trajectory) -> str:
    lines = ["step,x,y,event"]
    for step, x, y, event in trajectory:
        lines.append(f"{step},{x:.6f},{y:.6f},{event}")
    return "\n".join(lines) + "\n"
