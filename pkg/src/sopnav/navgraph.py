"""Navigation graph over the belief map and the orienteering instances built
from it.

Viewpoint nodes are grouped into clusters: one cluster per unvisited observed
landmark (up to four compass viewpoints on the short-range circle), one
single-node pseudo-cluster per frontier cluster, plus the robot's start node
in a cluster of its own. Edge costs are shortest known-grid path lengths,
computed by one Dijkstra field per node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractError, NothingToPlan
from .kernels import KNOWN_FREE
from .sensing import BeliefMap, FrontierCluster
from .world import Pose

START_CLUSTER = -1


def frontier_cluster_id(index: int) -> int:
    """Pseudo-cluster id for the index-th frontier cluster."""
    return -2 - index


@dataclass(frozen=True)
class Node:
    node_id: int
    cell: tuple[int, int]
    pose: Pose
    cluster_id: int
    reward: float


@dataclass
class NavGraph:
    nodes: list[Node]
    cost: np.ndarray  # (n, n) meters; inf = unreachable
    resolution_m: float
    start_node: int = 0

    @property
    def n(self) -> int:
        return len(self.nodes)


@dataclass
class SopInstance:
    """Budgeted cluster-reward path problem over a dense cost matrix."""

    rewards: np.ndarray  # (n,)
    cluster_ids: np.ndarray  # (n,) int64
    cost: np.ndarray  # (n, n) meters
    start: int
    budget: float
    end: int | None = None
    detection: np.ndarray | None = field(default=None, repr=False)
    node_ids: np.ndarray | None = field(default=None, repr=False)  # source-graph node ids

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.cluster_ids = np.asarray(self.cluster_ids, dtype=np.int64)
        self.cost = np.asarray(self.cost, dtype=np.float64)
        if self.detection is None:
            self.detection = self.rewards.copy()
        n = self.n
        if self.cost.shape != (n, n):
            raise ContractError("cost matrix shape does not match node count")
        if not 0 <= self.start < n:
            raise ContractError("start node out of range")
        if self.budget < 0:
            raise ContractError("budget must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.rewards)

    def clusters(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, cid in enumerate(self.cluster_ids):
            out.setdefault(int(cid), []).append(i)
        return out

    def non_start_clusters(self) -> list[int]:
        start_cluster = int(self.cluster_ids[self.start])
        return sorted(set(int(c) for c in self.cluster_ids) - {start_cluster})


def _pose_cell(pose: Pose, res: float) -> tuple[int, int]:
    return int(pose.y_m / res), int(pose.x_m / res)


def all_pairs_costs(belief: BeliefMap, poses: list[Pose]) -> np.ndarray:
    """Dense symmetric cost matrix in meters over known-free shortest paths."""
    res = belief.resolution_m
    cells = []
    for p in poses:
        r, c = _pose_cell(p, res)
        if belief.known[r, c] != KNOWN_FREE:
            raise ContractError(f"pose {p} is not on a known-free cell")
        cells.append((r, c))
    n = len(cells)
    cost = np.zeros((n, n))
    if n <= 1:
        return cost
    sources = np.array(cells[:-1], dtype=np.int64)
    fields = kernels.dijkstra_fields(belief.known_free_mask(), sources)
    for i in range(n - 1):
        for j in range(i + 1, n):
            d = fields[i][cells[j]] * res
            cost[i, j] = d
            cost[j, i] = d
    return cost


def _viewpoint_candidates(belief: BeliefMap, walls, lm_cell: tuple[int, int], radius_cells: int):
    """Up to one known-free cell per compass direction, within the radius.

    Scans from the circle inward and keeps cells with a clear sightline to
    the landmark on the known map, so viewpoints across a wall are rejected
    up front.
    """
    H, W = belief.known.shape
    lr, lc = lm_cell
    seen = set()
    out = []
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        for dist in range(radius_cells, 0, -1):
            r, c = lr + dr * dist, lc + dc * dist
            if not (0 <= r < H and 0 <= c < W):
                continue
            if belief.known[r, c] != KNOWN_FREE or (r, c) in seen:
                continue
            if not kernels.line_of_sight_cells(walls, r, c, lr, lc):
                continue
            seen.add((r, c))
            out.append((r, c))
            break
    return out


def _nearest_cell(cells: np.ndarray, goal_cell: tuple[int, int]):
    """Cell from `cells` (argwhere layout) nearest to the goal, ties broken
    at the lowest (row, col)."""
    if len(cells) == 0:
        return None
    d2 = (cells[:, 0] - goal_cell[0]) ** 2 + (cells[:, 1] - goal_cell[1]) ** 2
    best = cells[np.lexsort((cells[:, 1], cells[:, 0], d2))[0]]
    return int(best[0]), int(best[1])


def build_graph(
    belief: BeliefMap,
    robot: Pose,
    short_range_m: float,
    frontier: list[FrontierCluster] | None = None,
) -> NavGraph:
    """Viewpoint graph over the current belief, rooted at the robot.

    Landmarks with no reachable viewpoint contribute no nodes. When frontier
    clusters are supplied, their anchor cells join the graph as single-node
    pseudo-clusters so exploration goals can enter the same instances.

    A goal whose surroundings are unmapped gets a stand-in waypoint: the map
    frontier cell nearest to it. Reaching a frontier cell always reveals new
    ground, so approaches route through doors and openings and make progress
    by construction.
    """
    res = belief.resolution_m
    rr, rc = _pose_cell(robot, res)
    if belief.known[rr, rc] != KNOWN_FREE:
        raise ContractError("robot is not on a known-free cell")
    radius_cells = max(1, int(short_range_m / res))

    frontier_cells = np.argwhere(kernels.frontier_mask(belief.known))
    walls = belief.known_wall_mask()
    raw: list[tuple[tuple[int, int], int, float]] = [((rr, rc), START_CLUSTER, 0.0)]
    for lid in belief.unvisited_observed():
        ol = belief.observed[lid]
        lm_cell = _pose_cell(ol.pose, res)
        cands = _viewpoint_candidates(belief, walls, lm_cell, radius_cells)
        if not cands:
            snap = _nearest_cell(frontier_cells, lm_cell)
            if snap is not None:
                cands = [snap]
        for cell in cands:
            raw.append((cell, lid, ol.relevance))
    for k, fc in enumerate(frontier or []):
        cell = fc.anchor
        if belief.known[cell] != KNOWN_FREE:
            cell = _nearest_cell(frontier_cells, fc.anchor)
            if cell is None:
                continue
        raw.append((cell, frontier_cluster_id(k), 0.0))

    passable = belief.known_free_mask()
    sources = np.array([cell for cell, _, _ in raw], dtype=np.int64)
    fields = kernels.dijkstra_fields(passable, sources)
    start_dist = fields[0]
    keep = [i for i, (cell, _, _) in enumerate(raw) if np.isfinite(start_dist[cell])]

    n = len(keep)
    cost = np.zeros((n, n))
    for a in range(n - 1):
        ia = keep[a]
        for b in range(a + 1, n):
            d = fields[ia][raw[keep[b]][0]] * res
            cost[a, b] = d
            cost[b, a] = d

    nodes = []
    for new_id, i in enumerate(keep):
        (r, c), cid, reward = raw[i]
        pose = Pose((c + 0.5) * res, (r + 0.5) * res)
        nodes.append(Node(new_id, (r, c), pose, cid, reward))
    return NavGraph(nodes=nodes, cost=cost, resolution_m=res, start_node=0)


def make_sop_instance(
    g: NavGraph,
    budget_m: float,
    frontier: list[FrontierCluster] | None = None,
    explore_weight: float = 0.0,
) -> SopInstance:
    """Instance with landmark-relevance rewards plus scalarized exploration
    rewards (explore_weight * normalized frontier-cluster size).

    Raises NothingToPlan when no node carries any reward: the episode has
    nothing left to chase.
    """
    if budget_m <= 0:
        raise ContractError("budget must be positive")
    frontier = frontier or []
    frontier_nodes = [nd for nd in g.nodes if nd.cluster_id <= -2]

    sizes = {frontier_cluster_id(k): fc.size for k, fc in enumerate(frontier)}
    present_sizes = [sizes[nd.cluster_id] for nd in frontier_nodes if nd.cluster_id in sizes]
    max_size = max(present_sizes) if present_sizes else 0

    keep: list[int] = []
    rewards: list[float] = []
    detection: list[float] = []
    for nd in g.nodes:
        if nd.cluster_id <= -2:
            if explore_weight <= 0 or nd.cluster_id not in sizes or max_size == 0:
                continue
            keep.append(nd.node_id)
            rewards.append(explore_weight * sizes[nd.cluster_id] / max_size)
            detection.append(0.0)
        else:
            keep.append(nd.node_id)
            rewards.append(nd.reward)
            detection.append(nd.reward if nd.cluster_id != START_CLUSTER else 0.0)

    idx = np.array(keep, dtype=np.int64)
    rewards_arr = np.array(rewards)
    if rewards_arr.sum() <= 0:
        raise NothingToPlan("no reward anywhere: nothing left to visit or explore")
    start = int(np.nonzero(idx == g.start_node)[0][0])
    return SopInstance(
        rewards=rewards_arr,
        cluster_ids=np.array([g.nodes[i].cluster_id for i in keep], dtype=np.int64),
        cost=g.cost[np.ix_(idx, idx)],
        start=start,
        budget=float(budget_m),
        detection=np.array(detection),
        node_ids=idx,
    )


def instance_to_text(inst: SopInstance) -> str:
    """Line format: header `n B s`, rewards, cluster ids, then cost rows."""
    lines = [f"{inst.n} {inst.budget!r} {inst.start}"]
    lines.append(" ".join(repr(float(r)) for r in inst.rewards))
    lines.append(" ".join(str(int(c)) for c in inst.cluster_ids))
    for row in inst.cost:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> SopInstance:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3:
        raise ContractError("truncated instance text")
    head = lines[0].split()
    n = int(head[0])
    budget = float(head[1])
    start = int(head[2])
    if len(lines) != 3 + n:
        raise ContractError(f"expected {3 + n} lines, found {len(lines)}")
    rewards = np.array([float(v) for v in lines[1].split()])
    cluster_ids = np.array([int(v) for v in lines[2].split()], dtype=np.int64)
    cost = np.array([[float(v) for v in lines[3 + i].split()] for i in range(n)])
    if len(rewards) != n or len(cluster_ids) != n:
        raise ContractError("reward/cluster line length does not match n")
    return SopInstance(rewards, cluster_ids, cost, start, budget)
