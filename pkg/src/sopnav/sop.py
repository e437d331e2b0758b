"""Solvers for the budgeted cluster-reward path problem.

`solve_exact` is a depth-first branch-and-bound over cluster sequences with
an admissible remaining-reward bound; it serves as the oracle for small
instances. `solve_vns` is a variable neighborhood search: greedy construction,
local search over insert/swap/segment-reversal moves, and shakes that remove
random clusters and repair greedily. `validate` re-checks every constraint a
solution must satisfy and reports violations as data.

Paths are open (no fixed end node unless the instance sets one), start at the
instance's start node, visit at most one node per cluster and never repeat a
node, which rules out subtours structurally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InstanceTooLarge
from .navgraph import SopInstance

_EPS = 1e-9


@dataclass
class SopSolution:
    path: list[int]
    visited_clusters: frozenset[int]
    total_reward: float
    total_cost: float

    def to_line(self) -> str:
        ids = " ".join(str(i) for i in self.path)
        return f"{self.total_reward!r} {self.total_cost!r} {ids}\n"

    @classmethod
    def from_line(cls, line: str, inst: SopInstance) -> "SopSolution":
        parts = line.split()
        path = [int(v) for v in parts[2:]]
        return evaluate(inst, path)


def path_cost(inst: SopInstance, path: list[int]) -> float:
    cost = 0.0
    for a, b in zip(path, path[1:]):
        cost += float(inst.cost[a, b])
    return cost


def evaluate(inst: SopInstance, path: list[int]) -> SopSolution:
    reward = 0.0
    for i in path:
        reward += float(inst.rewards[i])
    clusters = frozenset(int(inst.cluster_ids[i]) for i in path)
    return SopSolution(list(path), clusters, reward, path_cost(inst, path))


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(inst: SopInstance, sol: SopSolution) -> ValidationReport:
    """Check start, degree/subtour structure, budget, cluster uniqueness and
    the solution's own arithmetic. Violations are reported, not raised."""
    v: list[str] = []
    path = sol.path
    if not path:
        return ValidationReport(["path is empty"])
    if any(not (0 <= i < inst.n) for i in path):
        return ValidationReport([f"path contains out-of-range node ids: {path}"])
    if path[0] != inst.start:
        v.append(f"path starts at {path[0]}, expected start node {inst.start}")
    if inst.end is not None and path[-1] != inst.end:
        v.append(f"path ends at {path[-1]}, expected end node {inst.end}")
    if len(set(path)) != len(path):
        v.append("a node repeats: subtour elimination violated")
    cids = [int(inst.cluster_ids[i]) for i in path]
    if len(set(cids)) != len(cids):
        v.append("more than one node visited in a cluster")
    for a, b in zip(path, path[1:]):
        if not np.isfinite(inst.cost[a, b]):
            v.append(f"edge ({a}, {b}) has non-finite cost")
    cost = path_cost(inst, path)
    if abs(cost - sol.total_cost) > _EPS:
        v.append(f"claimed cost {sol.total_cost} != recomputed {cost}")
    reward = sum(float(inst.rewards[i]) for i in path)
    if abs(reward - sol.total_reward) > _EPS:
        v.append(f"claimed reward {sol.total_reward} != recomputed {reward}")
    if cost > inst.budget + _EPS:
        v.append(f"cost {cost} exceeds budget {inst.budget}")
    if set(cids) != set(sol.visited_clusters):
        v.append("visited_clusters does not match the path")
    return ValidationReport(v)


def _is_better(reward: float, cost: float, path: list[int], best) -> bool:
    if reward != best[0]:
        return reward > best[0]
    if cost != best[1]:
        return cost < best[1]
    return path < best[2]


def solve_exact(inst: SopInstance, exact_limit: int = 12) -> SopSolution:
    """Reward-maximal solution; minimum cost, then lexicographically smallest
    path among reward ties. Raises InstanceTooLarge above `exact_limit`
    non-start clusters."""
    cluster_list = inst.non_start_clusters()
    if len(cluster_list) > exact_limit:
        raise InstanceTooLarge(
            f"{len(cluster_list)} clusters exceeds exact limit {exact_limit}; use solve_vns"
        )
    members = inst.clusters()
    C = inst.cost.tolist()
    R = inst.rewards.tolist()
    budget = inst.budget
    end = inst.end
    start = inst.start
    k = len(cluster_list)
    member_nodes = [sorted(members[cid]) for cid in cluster_list]
    cluster_reward = [max(R[i] for i in member_nodes[j]) for j in range(k)]
    total_remaining = sum(cluster_reward)

    best = [-np.inf, np.inf, [start]]
    if end is None or end == start:
        best = [R[start], 0.0, [start]]

    path = [start]

    def rec(used: int, reward: float, cost: float, remaining: float):
        last = path[-1]
        if (end is None or last == end) and _is_better(reward, cost, path, best):
            best[0], best[1], best[2] = reward, cost, list(path)
        potential = reward + remaining
        if potential < best[0] - _EPS:
            return
        if potential <= best[0] and cost > best[1]:
            return
        children = []
        row = C[last]
        for j in range(k):
            if used & (1 << j):
                continue
            for v in member_nodes[j]:
                step = row[v]
                if cost + step <= budget:
                    children.append((step, j, v))
        children.sort()
        for step, j, v in children:
            path.append(v)
            rec(used | (1 << j), reward + R[v], cost + step, remaining - cluster_reward[j])
            path.pop()

    rec(0, R[start], 0.0, total_remaining)
    if not np.isfinite(best[0]):
        raise ContractError("no feasible solution ends at the required end node")
    return evaluate(inst, best[2])


# ---------------------------------------------------------------------------
# variable neighborhood search
# ---------------------------------------------------------------------------

def _list_cost(C, path) -> float:
    cost = 0.0
    for a, b in zip(path, path[1:]):
        cost += C[a][b]
    return cost


def _greedy_insert_all(inst: SopInstance, path: list[int], C, R) -> list[int]:
    """Insert missing clusters by best reward-per-added-cost until the budget
    refuses every candidate."""
    members = inst.clusters()
    start_cluster = int(inst.cluster_ids[inst.start])
    budget = inst.budget
    while True:
        in_path = {int(inst.cluster_ids[i]) for i in path}
        cost_now = _list_cost(C, path)
        best_key = None
        best_move = None
        for cid in sorted(members):
            if cid in in_path or cid == start_cluster:
                continue
            for v in sorted(members[cid]):
                for pos in range(1, len(path) + 1):
                    a = path[pos - 1]
                    if pos == len(path):
                        delta = C[a][v]
                    else:
                        b = path[pos]
                        delta = C[a][v] + C[v][b] - C[a][b]
                    if cost_now + delta > budget:
                        continue
                    ratio = R[v] / delta if delta > _EPS else float("inf")
                    key = (ratio, R[v], -delta)
                    if best_key is None or key > best_key:
                        best_key = key
                        best_move = (v, pos)
        if best_move is None:
            return path
        v, pos = best_move
        path = path[:pos] + [v] + path[pos:]


def _local_search(inst: SopInstance, path: list[int], C, R) -> list[int]:
    """Best-improvement descent: reward-raising cluster inserts, then
    cost-reducing swaps and segment reversals (which free budget for more
    inserts)."""
    while True:
        improved = False
        grown = _greedy_insert_all(inst, path, C, R)
        if len(grown) > len(path):
            path = grown
            improved = True
        cost_now = _list_cost(C, path)
        n = len(path)
        best_delta = -_EPS
        best_path = None
        for i in range(1, n - 1):  # swap
            for j in range(i + 1, n):
                cand = path[:]
                cand[i], cand[j] = cand[j], cand[i]
                delta = _list_cost(C, cand) - cost_now
                if delta < best_delta:
                    best_delta = delta
                    best_path = cand
        for i in range(1, n - 1):  # reverse segment
            for j in range(i + 1, n):
                cand = path[:i] + path[i : j + 1][::-1] + path[j + 1 :]
                delta = _list_cost(C, cand) - cost_now
                if delta < best_delta:
                    best_delta = delta
                    best_path = cand
        if best_path is not None:
            path = best_path
            improved = True
        if not improved:
            return path


def _shake(inst: SopInstance, path: list[int], k: int, rng, C, R) -> list[int]:
    removable = list(range(1, len(path)))
    rng.shuffle(removable)
    drop = set(removable[: min(k, len(removable))])
    pruned = [v for i, v in enumerate(path) if i not in drop]
    return _greedy_insert_all(inst, pruned, C, R)


def solve_vns(inst: SopInstance, seed: int, iters: int = 60) -> SopSolution:
    """Feasible solution via variable neighborhood search.

    Deterministic for fixed (instance, seed, iters); the result never scores
    below the greedy construction it starts from.
    """
    if iters < 1:
        raise ContractError("iters must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    C = inst.cost.tolist()
    R = inst.rewards.tolist()

    cur = _local_search(inst, _greedy_insert_all(inst, [inst.start], C, R), C, R)
    best = cur
    best_eval = evaluate(inst, best)
    k = 1
    for _ in range(iters):
        cand = _local_search(inst, _shake(inst, cur, k, rng, C, R), C, R)
        cand_eval = evaluate(inst, cand)
        cur_eval = evaluate(inst, cur)
        if (cand_eval.total_reward, -cand_eval.total_cost) > (
            cur_eval.total_reward,
            -cur_eval.total_cost,
        ):
            cur = cand
            k = 1
        else:
            k = k % 3 + 1
        if (cand_eval.total_reward, -cand_eval.total_cost) > (
            best_eval.total_reward,
            -best_eval.total_cost,
        ):
            best = cand
            best_eval = cand_eval
    return best_eval
