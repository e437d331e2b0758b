"""Ground-truth environment: randomized room-grid workspaces, entity
placement and geometric queries used by the sensor models.

The workspace is a cell grid (0 = free, 1 = wall) wrapped by a one-cell
boundary wall. Interior walls form a randomized irregular lattice of rooms;
every wall shared by two adjacent rooms carries one door, which makes the
free space connected by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, ContractError
from . import kernels

FREE = 0
WALL = 1


@dataclass(frozen=True)
class Pose:
    """Continuous position in meters."""

    x_m: float
    y_m: float


@dataclass(frozen=True)
class Landmark:
    id: int
    pose: Pose
    relevance: float


@dataclass(frozen=True)
class Room:
    """Interior cell bounds, inclusive."""

    r0: int
    c0: int
    r1: int
    c1: int


@dataclass(frozen=True)
class WorldParams:
    width_m: float = 300.0
    height_m: float = 300.0
    resolution_m: float = 1.0
    room_min_m: float = 40.0
    room_max_m: float = 70.0
    door_width_cells: int = 2

    def validate(self):
        if self.width_m <= 0 or self.height_m <= 0 or self.resolution_m <= 0:
            raise ConfigError("workspace extents and resolution must be positive")
        for extent in (self.width_m, self.height_m):
            ratio = extent / self.resolution_m
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigError(
                    f"resolution {self.resolution_m} does not divide extent {extent}"
                )
        if self.room_min_m > self.room_max_m:
            raise ConfigError("room_min_m must not exceed room_max_m")
        if self.door_width_cells < 1:
            raise ConfigError("door_width_cells must be >= 1")
        room_min_cells = int(round(self.room_min_m / self.resolution_m))
        if room_min_cells < self.door_width_cells:
            raise ConfigError("rooms are narrower than the door width")
        for size, name in ((self.grid_width, "width"), (self.grid_height, "height")):
            if size - 2 < room_min_cells:
                raise ConfigError(f"workspace {name} cannot fit a single room")

    @property
    def grid_width(self) -> int:
        return int(round(self.width_m / self.resolution_m))

    @property
    def grid_height(self) -> int:
        return int(round(self.height_m / self.resolution_m))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "WorldParams":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown world parameters: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "WorldParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class Workspace:
    width_m: float
    height_m: float
    resolution_m: float
    cells: np.ndarray  # uint8 (H, W); 0 free, 1 wall
    rooms: list[Room]
    seed: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def pose_to_cell(self, pose: Pose) -> tuple[int, int]:
        r = int(pose.y_m / self.resolution_m)
        c = int(pose.x_m / self.resolution_m)
        H, W = self.cells.shape
        if not (0 <= r < H and 0 <= c < W):
            raise ContractError(f"pose {pose} outside workspace bounds")
        return r, c

    def cell_to_pose(self, r: int, c: int) -> Pose:
        res = self.resolution_m
        return Pose((c + 0.5) * res, (r + 0.5) * res)

    def is_free(self, pose: Pose) -> bool:
        r, c = self.pose_to_cell(pose)
        return self.cells[r, c] == FREE


@dataclass(frozen=True)
class PlacementParams:
    min_separation_cells: float = 2.0
    min_target_start_m: float = 3.0
    target_mode: str = "near_landmark"  # or "uniform"
    target_offset_m: float = 4.0
    relevance_mode: str = "peaked"  # "peaked" | "uniform" | "range"
    decoy_relevance: tuple[float, float] = (0.3, 0.7)

    def validate(self):
        if self.target_mode not in ("near_landmark", "uniform"):
            raise ConfigError(f"unknown target_mode {self.target_mode!r}")
        if self.relevance_mode not in ("peaked", "uniform", "range"):
            raise ConfigError(f"unknown relevance_mode {self.relevance_mode!r}")
        if self.min_separation_cells < 0 or self.target_offset_m <= 0:
            raise ConfigError("separations must be nonnegative, offsets positive")


@dataclass
class EntityPlacement:
    landmarks: list[Landmark]
    target: Pose
    start: Pose
    target_host_id: int | None = None  # diagnostic: landmark the target was placed near


def _cut_lines(rng: np.random.Generator, size: int, room_min: int, room_max: int) -> list[int]:
    """Wall-line coordinates along one axis, boundary lines included."""
    cuts = [0]
    pos = 0
    while True:
        width = int(rng.integers(room_min, room_max + 1))
        nxt = pos + width + 1
        if nxt >= size - 1 - room_min:
            break
        cuts.append(nxt)
        pos = nxt
    cuts.append(size - 1)
    return cuts


def generate_workspace(seed: int, params: WorldParams | None = None) -> Workspace:
    """Build the randomized room-grid workspace for one trial.

    Deterministic for a fixed (seed, params) pair. Raises ConfigError when
    the parameters cannot produce a valid layout.
    """
    params = params or WorldParams()
    params.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    H = params.grid_height
    W = params.grid_width
    res = params.resolution_m
    room_min = int(round(params.room_min_m / res))
    room_max = int(round(params.room_max_m / res))
    dw = params.door_width_cells

    cells = np.zeros((H, W), dtype=np.uint8)
    cells[0, :] = WALL
    cells[-1, :] = WALL
    cells[:, 0] = WALL
    cells[:, -1] = WALL

    row_cuts = _cut_lines(rng, H, room_min, room_max)
    col_cuts = _cut_lines(rng, W, room_min, room_max)
    for r in row_cuts:
        cells[r, :] = WALL
    for c in col_cuts:
        cells[:, c] = WALL

    rooms = []
    for i in range(len(row_cuts) - 1):
        for j in range(len(col_cuts) - 1):
            rooms.append(
                Room(row_cuts[i] + 1, col_cuts[j] + 1, row_cuts[i + 1] - 1, col_cuts[j + 1] - 1)
            )

    # one door per wall shared by two adjacent rooms
    for i in range(len(row_cuts) - 1):
        r_lo, r_hi = row_cuts[i] + 1, row_cuts[i + 1] - 1
        for c in col_cuts[1:-1]:
            d0 = int(rng.integers(r_lo, r_hi - dw + 2))
            cells[d0 : d0 + dw, c] = FREE
    for j in range(len(col_cuts) - 1):
        c_lo, c_hi = col_cuts[j] + 1, col_cuts[j + 1] - 1
        for r in row_cuts[1:-1]:
            d0 = int(rng.integers(c_lo, c_hi - dw + 2))
            cells[r, d0 : d0 + dw] = FREE

    return Workspace(params.width_m, params.height_m, res, cells, rooms, int(seed))


def _sample_separated_cells(rng, free_cells, count, min_sep):
    """Rejection-sample `count` free cells with pairwise distance >= min_sep."""
    chosen: list[tuple[int, int]] = []
    attempts = 0
    limit = 1000 * max(count, 1)
    while len(chosen) < count:
        if attempts >= limit:
            raise ConfigError("could not place entities with the required separation")
        attempts += 1
        idx = int(rng.integers(len(free_cells)))
        r, c = free_cells[idx]
        ok = True
        for pr, pc in chosen:
            if (r - pr) ** 2 + (c - pc) ** 2 < min_sep * min_sep:
                ok = False
                break
        if ok:
            chosen.append((int(r), int(c)))
    return chosen


def place_entities(
    seed: int, ws: Workspace, m: int, params: PlacementParams | None = None
) -> EntityPlacement:
    """Place landmarks, the start pose and the target for one trial.

    By default the target is dropped near one landmark (the "host"), and
    relevance weights peak at the host: the relevance channel plays the role
    of semantic similarity between observed landmarks and the search query.
    """
    params = params or PlacementParams()
    params.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    res = ws.resolution_m

    free_rc = np.argwhere(ws.cells == FREE)
    if len(free_rc) < m + 2:
        raise ConfigError(f"need at least {m + 2} free cells, found {len(free_rc)}")

    lm_cells = _sample_separated_cells(rng, free_rc, m, params.min_separation_cells)
    occupied = set(lm_cells)

    if params.relevance_mode == "uniform":
        relevance = np.ones(m)
    elif params.relevance_mode == "range":
        relevance = rng.uniform(0.5, 1.0, size=m)
    else:  # peaked
        lo, hi = params.decoy_relevance
        relevance = rng.uniform(lo, hi, size=m)
    host = int(rng.integers(m)) if m > 0 else None
    if params.relevance_mode == "peaked" and host is not None:
        relevance[host] = 1.0

    # start
    while True:
        idx = int(rng.integers(len(free_rc)))
        start_cell = (int(free_rc[idx][0]), int(free_rc[idx][1]))
        if start_cell not in occupied:
            break
    occupied.add(start_cell)

    min_ts_cells = params.min_target_start_m / res
    target_cell = None
    if params.target_mode == "near_landmark" and host is not None:
        hr, hc = lm_cells[host]
        radius = params.target_offset_m / res
        for _ in range(4):
            rad = int(math.ceil(radius))
            cand = []
            for r in range(max(0, hr - rad), min(ws.shape[0], hr + rad + 1)):
                for c in range(max(0, hc - rad), min(ws.shape[1], hc + rad + 1)):
                    if ws.cells[r, c] != FREE or (r, c) in occupied:
                        continue
                    if (r - hr) ** 2 + (c - hc) ** 2 > radius * radius:
                        continue
                    if (r - start_cell[0]) ** 2 + (c - start_cell[1]) ** 2 < min_ts_cells**2:
                        continue
                    cand.append((r, c))
            if cand:
                target_cell = cand[int(rng.integers(len(cand)))]
                break
            radius *= 2.0
    if target_cell is None:
        host = None if params.target_mode == "uniform" else host
        while True:
            idx = int(rng.integers(len(free_rc)))
            r, c = int(free_rc[idx][0]), int(free_rc[idx][1])
            if (r, c) in occupied:
                continue
            if (r - start_cell[0]) ** 2 + (c - start_cell[1]) ** 2 < min_ts_cells**2:
                continue
            target_cell = (r, c)
            break

    landmarks = [
        Landmark(i, ws.cell_to_pose(r, c), float(relevance[i]))
        for i, (r, c) in enumerate(lm_cells)
    ]
    return EntityPlacement(
        landmarks=landmarks,
        target=ws.cell_to_pose(*target_cell),
        start=ws.cell_to_pose(*start_cell),
        target_host_id=host,
    )


def line_of_sight(ws: Workspace, a: Pose, b: Pose) -> bool:
    """True iff the segment between the two poses crosses no wall cell."""
    ra, ca = ws.pose_to_cell(a)
    rb, cb = ws.pose_to_cell(b)
    return bool(kernels.line_of_sight_cells(ws.cells, ra, ca, rb, cb))


def free_space_connected(ws: Workspace) -> bool:
    """Flood-fill check that every free cell is reachable from every other."""
    free = np.argwhere(ws.cells == FREE)
    if len(free) == 0:
        return True
    mask = kernels.reachable_mask((ws.cells == FREE).astype(np.uint8), int(free[0][0]), int(free[0][1]))
    return int(mask.sum()) == len(free)


def grid_to_text(cells: np.ndarray) -> str:
    """Dump a grid as one character per cell: '.' free, '#' wall."""
    lookup = np.array([".", "#"])
    return "\n".join("".join(row) for row in lookup[cells]) + "\n"


def grid_from_text(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line]
    grid = np.array([[0 if ch == "." else 1 for ch in row] for row in rows], dtype=np.uint8)
    if grid.ndim != 2:
        raise ContractError("grid text rows have inconsistent lengths")
    return grid
