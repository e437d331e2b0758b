"""Grid kernels: Dijkstra distance fields, supercover line of sight, sensor
disk reveals and free-space flood fill.

Two interchangeable backends compute the same results:

* ``numba`` (default): ``@njit``-compiled loops, fast enough for full-scale
  benchmark batches.
* ``numpy``: vectorized numpy plus ``scipy.sparse.csgraph`` /
  ``scipy.ndimage``, used when numba is unavailable or when the environment
  variable ``SOPNAV_NO_NUMBA=1`` is set.

All functions work on cell grids indexed ``(row, col)``; callers convert
meters to cell units. Dijkstra distances are in cell units (orthogonal step
1, diagonal sqrt(2)); multiply by the grid resolution for meters.

Cell-state codes for belief grids are ``UNKNOWN=0``, ``KNOWN_FREE=1``,
``KNOWN_WALL=2``. Workspace/wall grids use ``0`` for free and ``1`` for wall.
"""

from __future__ import annotations

import math
import os

import numpy as np
import scipy.ndimage
import scipy.sparse
from scipy.sparse import csgraph

UNKNOWN = 0
KNOWN_FREE = 1
KNOWN_WALL = 2

SQRT2 = math.sqrt(2.0)

# 8-neighborhood; order is fixed so tie-breaking is reproducible.
_DR = np.array([-1, 1, 0, 0, -1, -1, 1, 1], dtype=np.int64)
_DC = np.array([0, 0, -1, 1, -1, 1, -1, 1], dtype=np.int64)
_STEP = np.array([1.0, 1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2, SQRT2])

_DISABLED = os.environ.get("SOPNAV_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

NUMBA_AVAILABLE = False
if not _DISABLED:
    try:
        from numba import njit

        NUMBA_AVAILABLE = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass


# ---------------------------------------------------------------------------
# numpy / scipy backend
# ---------------------------------------------------------------------------

def _los_np(walls, r0, c0, r1, c1):
    """Supercover traversal from cell (r0, c0) to (r1, c1).

    Returns False iff a wall cell is crossed strictly between the endpoints.
    Exact corner crossings count both side cells as crossed, so sight never
    leaks diagonally through touching wall corners.
    """
    nr = abs(r1 - r0)
    nc = abs(c1 - c0)
    sr = 1 if r1 > r0 else -1
    sc = 1 if c1 > c0 else -1
    r, c = r0, c0
    ir = ic = 0
    while ir < nr or ic < nc:
        t_col = (2 * ic + 1) * nr
        t_row = (2 * ir + 1) * nc
        if t_col == t_row:
            # passes exactly through a cell corner
            if walls[r + sr, c] != 0 or walls[r, c + sc] != 0:
                return False
            r += sr
            c += sc
            ir += 1
            ic += 1
        elif t_col < t_row:
            c += sc
            ic += 1
        else:
            r += sr
            ir += 1
        if (r != r1 or c != c1) and walls[r, c] != 0:
            return False
    return True


def _reveal_np(known, walls, pr, pc, radius_cells, occlude):
    H, W = known.shape
    rad = int(math.floor(radius_cells))
    r_lo = max(0, pr - rad)
    r_hi = min(H - 1, pr + rad)
    c_lo = max(0, pc - rad)
    c_hi = min(W - 1, pc + rad)
    box = known[r_lo : r_hi + 1, c_lo : c_hi + 1]
    rr, cc = np.mgrid[r_lo : r_hi + 1, c_lo : c_hi + 1]
    in_disk = (rr - pr) ** 2 + (cc - pc) ** 2 <= radius_cells * radius_cells
    fresh = (box == UNKNOWN) & in_disk
    if not occlude:
        wall_box = walls[r_lo : r_hi + 1, c_lo : c_hi + 1]
        box[fresh] = np.where(wall_box[fresh] != 0, KNOWN_WALL, KNOWN_FREE)
        return int(fresh.sum())
    new = 0
    for r, c in zip(*np.nonzero(fresh)):
        gr = r_lo + int(r)
        gc = c_lo + int(c)
        if _los_np(walls, pr, pc, gr, gc):
            known[gr, gc] = KNOWN_WALL if walls[gr, gc] != 0 else KNOWN_FREE
            new += 1
    return new


def _grid_csgraph(passable):
    H, W = passable.shape
    n = H * W
    idx = np.arange(n, dtype=np.int64).reshape(H, W)
    p = passable != 0
    rows = []
    cols = []
    data = []
    for dr, dc, w in (
        (-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
        (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2),
    ):
        r0s, r1s = max(0, -dr), H - max(0, dr)
        c0s, c1s = max(0, -dc), W - max(0, dc)
        src_idx = idx[r0s:r1s, c0s:c1s]
        dst_idx = idx[r0s + dr : r1s + dr, c0s + dc : c1s + dc]
        ok = p[r0s:r1s, c0s:c1s] & p[r0s + dr : r1s + dr, c0s + dc : c1s + dc]
        rows.append(src_idx[ok])
        cols.append(dst_idx[ok])
        data.append(np.full(int(ok.sum()), w))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def _dijkstra_field_np(passable, sr, sc):
    H, W = passable.shape
    graph = _grid_csgraph(passable)
    src = sr * W + sc
    dist, pred = csgraph.dijkstra(graph, directed=True, indices=src, return_predecessors=True)
    parent = pred.astype(np.int32)
    parent[parent < 0] = -1
    return dist.reshape(H, W), parent.reshape(H, W)


def _dijkstra_fields_np(passable, sources):
    H, W = passable.shape
    graph = _grid_csgraph(passable)
    flat = sources[:, 0] * W + sources[:, 1]
    dist = csgraph.dijkstra(graph, directed=True, indices=flat)
    return np.ascontiguousarray(dist.reshape(len(flat), H, W))


_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


def _reachable_np(passable, sr, sc):
    labels, _ = scipy.ndimage.label(passable != 0, structure=_CROSS)
    if labels[sr, sc] == 0:
        out = np.zeros_like(passable, dtype=np.uint8)
        if passable[sr, sc]:
            out[sr, sc] = 1
        return out
    return (labels == labels[sr, sc]).astype(np.uint8)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _los_nb(walls, r0, c0, r1, c1):
        nr = abs(r1 - r0)
        nc = abs(c1 - c0)
        sr = 1 if r1 > r0 else -1
        sc = 1 if c1 > c0 else -1
        r, c = r0, c0
        ir = 0
        ic = 0
        while ir < nr or ic < nc:
            t_col = (2 * ic + 1) * nr
            t_row = (2 * ir + 1) * nc
            if t_col == t_row:
                if walls[r + sr, c] != 0 or walls[r, c + sc] != 0:
                    return False
                r += sr
                c += sc
                ir += 1
                ic += 1
            elif t_col < t_row:
                c += sc
                ic += 1
            else:
                r += sr
                ir += 1
            if (r != r1 or c != c1) and walls[r, c] != 0:
                return False
        return True

    @njit(cache=True)
    def _reveal_nb(known, walls, pr, pc, radius_cells, occlude):
        H, W = known.shape
        rad = int(radius_cells)
        r2 = radius_cells * radius_cells
        new = 0
        r_lo = max(0, pr - rad)
        r_hi = min(H - 1, pr + rad)
        c_lo = max(0, pc - rad)
        c_hi = min(W - 1, pc + rad)
        for r in range(r_lo, r_hi + 1):
            dr = r - pr
            for c in range(c_lo, c_hi + 1):
                if known[r, c] != UNKNOWN:
                    continue
                dc = c - pc
                if dr * dr + dc * dc > r2:
                    continue
                if occlude and not _los_nb(walls, pr, pc, r, c):
                    continue
                known[r, c] = KNOWN_WALL if walls[r, c] != 0 else KNOWN_FREE
                new += 1
        return new

    @njit(cache=True)
    def _sift_up(heap, pos, key, i):
        while i > 0:
            parent = (i - 1) // 2
            if key[heap[i]] < key[heap[parent]]:
                heap[i], heap[parent] = heap[parent], heap[i]
                pos[heap[i]] = i
                pos[heap[parent]] = parent
                i = parent
            else:
                break

    @njit(cache=True)
    def _sift_down(heap, pos, key, size, i):
        while True:
            left = 2 * i + 1
            right = left + 1
            smallest = i
            if left < size and key[heap[left]] < key[heap[smallest]]:
                smallest = left
            if right < size and key[heap[right]] < key[heap[smallest]]:
                smallest = right
            if smallest == i:
                break
            heap[i], heap[smallest] = heap[smallest], heap[i]
            pos[heap[i]] = i
            pos[heap[smallest]] = smallest
            i = smallest

    @njit(cache=True)
    def _dijkstra_field_nb(passable, sr, sc):
        H, W = passable.shape
        n = H * W
        dist = np.full(n, np.inf)
        parent = np.full(n, -1, np.int32)
        heap = np.empty(n, np.int64)
        pos = np.full(n, -1, np.int64)
        s = sr * W + sc
        dist[s] = 0.0
        heap[0] = s
        pos[s] = 0
        size = 1
        while size > 0:
            u = heap[0]
            pos[u] = -2
            size -= 1
            if size > 0:
                last = heap[size]
                heap[0] = last
                pos[last] = 0
                _sift_down(heap, pos, dist, size, 0)
            du = dist[u]
            ur = u // W
            uc = u % W
            for k in range(8):
                vr = ur + _DR[k]
                vc = uc + _DC[k]
                if vr < 0 or vr >= H or vc < 0 or vc >= W:
                    continue
                if passable[vr, vc] == 0:
                    continue
                v = vr * W + vc
                if pos[v] == -2:
                    continue
                nd = du + _STEP[k]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = u
                    if pos[v] == -1:
                        heap[size] = v
                        pos[v] = size
                        size += 1
                        _sift_up(heap, pos, dist, size - 1)
                    else:
                        _sift_up(heap, pos, dist, pos[v])
        return dist.reshape(H, W), parent.reshape(H, W)

    @njit(cache=True)
    def _dijkstra_fields_nb(passable, sources):
        H, W = passable.shape
        k = sources.shape[0]
        out = np.empty((k, H, W))
        for i in range(k):
            d, _ = _dijkstra_field_nb(passable, sources[i, 0], sources[i, 1])
            out[i] = d
        return out

    @njit(cache=True)
    def _reachable_nb(passable, sr, sc):
        H, W = passable.shape
        out = np.zeros((H, W), np.uint8)
        if passable[sr, sc] == 0:
            return out
        queue = np.empty(H * W, np.int64)
        queue[0] = sr * W + sc
        out[sr, sc] = 1
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            ur = u // W
            uc = u % W
            for k in range(4):
                vr = ur + _DR[k]
                vc = uc + _DC[k]
                if vr < 0 or vr >= H or vc < 0 or vc >= W:
                    continue
                if passable[vr, vc] == 0 or out[vr, vc] != 0:
                    continue
                out[vr, vc] = 1
                queue[tail] = vr * W + vc
                tail += 1
        return out


# ---------------------------------------------------------------------------
# shared helpers and backend selection
# ---------------------------------------------------------------------------

def frontier_mask(known):
    """Known-free cells 4-adjacent to at least one unknown cell."""
    free = known == KNOWN_FREE
    unk = known == UNKNOWN
    adj = np.zeros_like(unk)
    adj[1:, :] |= unk[:-1, :]
    adj[:-1, :] |= unk[1:, :]
    adj[:, 1:] |= unk[:, :-1]
    adj[:, :-1] |= unk[:, 1:]
    return free & adj


def extract_path(parent, sr, sc, tr, tc):
    """Walk a parent field back from (tr, tc) to the source; [] if unreachable."""
    W = parent.shape[1]
    flat = parent.reshape(-1)
    target = tr * W + tc
    src = sr * W + sc
    if target != src and flat[target] == -1:
        return []
    path = [(tr, tc)]
    cur = target
    while cur != src:
        cur = int(flat[cur])
        path.append((cur // W, cur % W))
    path.reverse()
    return path


IMPLEMENTATIONS = {
    "numpy": {
        "line_of_sight_cells": _los_np,
        "reveal_disk": _reveal_np,
        "dijkstra_field": _dijkstra_field_np,
        "dijkstra_fields": _dijkstra_fields_np,
        "reachable_mask": _reachable_np,
    }
}

if NUMBA_AVAILABLE:
    IMPLEMENTATIONS["numba"] = {
        "line_of_sight_cells": _los_nb,
        "reveal_disk": _reveal_nb,
        "dijkstra_field": _dijkstra_field_nb,
        "dijkstra_fields": _dijkstra_fields_nb,
        "reachable_mask": _reachable_nb,
    }

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"

line_of_sight_cells = IMPLEMENTATIONS[BACKEND]["line_of_sight_cells"]
reveal_disk = IMPLEMENTATIONS[BACKEND]["reveal_disk"]
dijkstra_field = IMPLEMENTATIONS[BACKEND]["dijkstra_field"]
dijkstra_fields = IMPLEMENTATIONS[BACKEND]["dijkstra_fields"]
reachable_mask = IMPLEMENTATIONS[BACKEND]["reachable_mask"]
