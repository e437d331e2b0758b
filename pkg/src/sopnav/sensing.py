"""Sensor models and the incremental belief map.

Two detector abstractions drive the search task: a long-range detector of
radius L that maps cells and spots objects (landmarks and the target), and a
short-range detector of radius R that confirms the target and marks a
landmark as checked once the robot stands within R of it. Re-observing
anything yields zero new information.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, ContractError
from .kernels import UNKNOWN, KNOWN_FREE, KNOWN_WALL
from .world import FREE, EntityPlacement, Pose, Workspace


@dataclass(frozen=True)
class SensorConfig:
    long_range_m: float = 100.0
    short_range_m: float = 3.0
    occlusion: bool = True
    # Walls gate the landmark channel separately: wide-area landmark knowledge
    # often comes from vantage points the occupancy sensor does not share, so
    # by default landmark spotting is range-limited but sees across walls.
    landmark_occlusion: bool = False

    def validate(self):
        if not (self.long_range_m > self.short_range_m > 0):
            raise ConfigError("sensor ranges must satisfy long > short > 0")


@dataclass(frozen=True)
class ObservedLandmark:
    pose: Pose
    relevance: float
    observed_step: int


@dataclass
class BeliefMap:
    """Incrementally grown knowledge: occupancy plus observed objects.

    `known` only ever transitions unknown -> free/wall; observed and visited
    landmark sets grow monotonically with visited a subset of observed.
    `scanned` tracks the union of long-range disks along the trajectory: the
    area whose landmarks have been swept by the long-range detector.
    """

    known: np.ndarray  # int8 (H, W): UNKNOWN / KNOWN_FREE / KNOWN_WALL
    resolution_m: float
    scanned: np.ndarray = None  # uint8 (H, W)
    observed: dict[int, ObservedLandmark] = field(default_factory=dict)
    visited: set[int] = field(default_factory=set)
    target_found: Pose | None = None
    target_confirmed: bool = False
    step: int = 0

    def __post_init__(self):
        if self.scanned is None:
            self.scanned = np.zeros_like(self.known, dtype=np.uint8)

    @classmethod
    def blank(cls, ws: Workspace) -> "BeliefMap":
        return cls(np.zeros(ws.shape, dtype=np.int8), ws.resolution_m)

    def unvisited_observed(self) -> list[int]:
        return sorted(set(self.observed) - self.visited)

    def mark_visited(self, landmark_id: int):
        if landmark_id not in self.observed:
            raise ContractError(f"landmark {landmark_id} was never observed")
        self.visited.add(landmark_id)

    def known_free_mask(self) -> np.ndarray:
        return (self.known == KNOWN_FREE).astype(np.uint8)

    def known_wall_mask(self) -> np.ndarray:
        return (self.known == KNOWN_WALL).astype(np.uint8)


@dataclass(frozen=True)
class ObservationEvent:
    newly_revealed_cells: int
    new_landmarks: list[int]
    target_detected: bool


@dataclass(frozen=True)
class FrontierCluster:
    centroid: Pose
    size: int
    cells: np.ndarray  # (k, 2) int cell coordinates
    anchor: tuple[int, int]  # cluster cell closest to the centroid


def _visible(ws: Workspace, pr: int, pc: int, er: int, ec: int, radius_cells: float, occlude: bool) -> bool:
    if (er - pr) ** 2 + (ec - pc) ** 2 > radius_cells * radius_cells:
        return False
    if occlude and not kernels.line_of_sight_cells(ws.cells, pr, pc, er, ec):
        return False
    return True


def _mark_scanned(scanned: np.ndarray, pr: int, pc: int, radius_cells: float):
    H, W = scanned.shape
    rad = int(radius_cells)
    r_lo, r_hi = max(0, pr - rad), min(H, pr + rad + 1)
    c_lo, c_hi = max(0, pc - rad), min(W, pc + rad + 1)
    rr, cc = np.ogrid[r_lo:r_hi, c_lo:c_hi]
    disk = (rr - pr) ** 2 + (cc - pc) ** 2 <= radius_cells * radius_cells
    scanned[r_lo:r_hi, c_lo:c_hi] |= disk.astype(np.uint8)


def sense(
    ws: Workspace,
    placement: EntityPlacement,
    belief: BeliefMap,
    pose: Pose,
    cfg: SensorConfig,
) -> ObservationEvent:
    """Run both detectors from `pose` and fold the results into `belief`."""
    cfg.validate()
    pr, pc = ws.pose_to_cell(pose)
    if ws.cells[pr, pc] != FREE:
        raise ContractError("sensing pose is not on a free cell")
    belief.step += 1
    res = ws.resolution_m
    long_cells = cfg.long_range_m / res
    short_cells = cfg.short_range_m / res

    new_cells = int(
        kernels.reveal_disk(belief.known, ws.cells, pr, pc, long_cells, cfg.occlusion)
    )
    _mark_scanned(belief.scanned, pr, pc, long_cells)

    new_ids: list[int] = []
    for lm in placement.landmarks:
        if lm.id in belief.observed:
            continue
        er, ec = ws.pose_to_cell(lm.pose)
        if _visible(ws, pr, pc, er, ec, long_cells, cfg.landmark_occlusion):
            belief.observed[lm.id] = ObservedLandmark(lm.pose, lm.relevance, belief.step)
            new_ids.append(lm.id)

    tr, tc = ws.pose_to_cell(placement.target)
    if belief.target_found is None and _visible(ws, pr, pc, tr, tc, long_cells, cfg.occlusion):
        belief.target_found = placement.target
    detected = _visible(ws, pr, pc, tr, tc, short_cells, cfg.occlusion)
    if detected:
        belief.target_confirmed = True
        belief.target_found = placement.target

    for lid in belief.unvisited_observed():
        ol = belief.observed[lid]
        er, ec = ws.pose_to_cell(ol.pose)
        if _visible(ws, pr, pc, er, ec, short_cells, cfg.occlusion):
            belief.visited.add(lid)

    return ObservationEvent(new_cells, new_ids, detected)


def _make_cluster(comp: list[tuple[int, int]], res: float) -> FrontierCluster:
    comp_arr = np.array(sorted(comp), dtype=np.int64)
    cy = (comp_arr[:, 0].mean() + 0.5) * res
    cx = (comp_arr[:, 1].mean() + 0.5) * res
    d2 = (comp_arr[:, 0] - comp_arr[:, 0].mean()) ** 2 + (
        comp_arr[:, 1] - comp_arr[:, 1].mean()
    ) ** 2
    anchor = comp_arr[int(np.argmin(d2))]  # sorted order breaks ties at (row, col)
    return FrontierCluster(
        centroid=Pose(float(cx), float(cy)),
        size=len(comp),
        cells=comp_arr,
        anchor=(int(anchor[0]), int(anchor[1])),
    )


def _cluster_mask_cells(
    mask: np.ndarray, res: float, chunk_cells: int | None = None
) -> list[FrontierCluster]:
    """8-connected components of a boolean cell mask, ordered by their lowest
    (row, col) cell so callers can tie-break deterministically.

    With `chunk_cells`, long components are split into traversal-order arcs
    of at most that many cells, giving planners several directional goals
    along one boundary instead of a single point."""
    cells = np.argwhere(mask)
    if len(cells) == 0:
        return []
    remaining = {(int(r), int(c)) for r, c in cells}
    clusters = []
    for r, c in cells:  # row-major order: first unseen cell is the component minimum
        seed = (int(r), int(c))
        if seed not in remaining:
            continue
        queue = [seed]
        remaining.discard(seed)
        comp = []
        head = 0
        while head < len(queue):
            cr, cc = queue[head]
            head += 1
            comp.append((cr, cc))
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    nxt = (cr + dr, cc + dc)
                    if nxt in remaining:
                        remaining.discard(nxt)
                        queue.append(nxt)
        if chunk_cells is None or len(comp) <= chunk_cells:
            clusters.append(_make_cluster(comp, res))
        else:
            # breadth-first order walks thin boundary arcs end to end, so
            # fixed-size slices stay spatially coherent
            for i in range(0, len(comp), chunk_cells):
                chunk = comp[i : i + chunk_cells]
                if len(chunk) < max(2, chunk_cells // 4) and clusters:
                    continue  # drop crumbs at the tail of an arc
                clusters.append(_make_cluster(chunk, res))
    clusters.sort(key=lambda fc: (fc.cells[0][0], fc.cells[0][1]))
    return clusters


def frontier_clusters(belief: BeliefMap) -> list[FrontierCluster]:
    """Connected components of known-free cells bordering unknown map."""
    return _cluster_mask_cells(kernels.frontier_mask(belief.known), belief.resolution_m)


def scan_frontier_clusters(belief: BeliefMap, chunk_cells: int | None = None) -> list[FrontierCluster]:
    """Boundary of the long-range-scanned region: unscanned cells 4-adjacent
    to scanned ones. Heading there extends landmark-discovery coverage, the
    exploration side of the search trade-off."""
    unscanned = belief.scanned == 0
    scanned = ~unscanned
    adj = np.zeros_like(scanned)
    adj[1:, :] |= scanned[:-1, :]
    adj[:-1, :] |= scanned[1:, :]
    adj[:, 1:] |= scanned[:, :-1]
    adj[:, :-1] |= scanned[:, 1:]
    return _cluster_mask_cells(unscanned & adj, belief.resolution_m, chunk_cells)


def belief_to_text(belief: BeliefMap) -> str:
    """Grid snapshot: '?' unknown, '.' known free, '#' known wall."""
    lookup = np.array(["?", ".", "#"])
    return "\n".join("".join(row) for row in lookup[belief.known]) + "\n"


def landmarks_to_csv(belief: BeliefMap) -> str:
    lines = ["id,x,y,relevance,observed_step"]
    for lid in sorted(belief.observed):
        ol = belief.observed[lid]
        lines.append(
            f"{lid},{ol.pose.x_m:.6f},{ol.pose.y_m:.6f},{ol.relevance:.6f},{ol.observed_step}"
        )
    return "\n".join(lines) + "\n"
