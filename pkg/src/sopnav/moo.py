"""Multi-objective layer over the orienteering solvers: objective vectors,
dominance, scalarization, epsilon-constraint solving and Pareto front
enumeration.

Objective vectors are ordered (reward, cost, detection): reward and detection
are maximized, cost minimized. Pareto enumeration works on the two-objective
(reward, cost) trade-off by sweeping cost bounds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractError
from .navgraph import SopInstance
from .sop import SopSolution, evaluate, solve_exact


class Sense(enum.Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class ObjectiveVector:
    values: tuple[float, ...]

    @property
    def reward(self) -> float:
        return self.values[0]

    @property
    def cost(self) -> float:
        return self.values[1]

    @property
    def detection(self) -> float:
        return self.values[2]


REWARD_COST_SENSES = (Sense.MAX, Sense.MIN)
FULL_SENSES = (Sense.MAX, Sense.MIN, Sense.MAX)


def objective_vector(inst: SopInstance, sol: SopSolution) -> ObjectiveVector:
    detection = sum(float(inst.detection[i]) for i in sol.path)
    return ObjectiveVector((sol.total_reward, sol.total_cost, detection))


def dominates(a: ObjectiveVector, b: ObjectiveVector, senses) -> bool:
    """True iff `a` is at least as good as `b` everywhere and strictly better
    somewhere."""
    if len(a.values) != len(b.values) or len(a.values) != len(senses):
        raise ContractError("objective arity mismatch")
    strict = False
    for av, bv, sense in zip(a.values, b.values, senses):
        if sense is Sense.MAX:
            if av < bv:
                return False
            strict = strict or av > bv
        else:
            if av > bv:
                return False
            strict = strict or av < bv
    return strict


@dataclass
class ParetoFront:
    points: list[tuple[ObjectiveVector, SopSolution]]

    def objective_vectors(self) -> list[ObjectiveVector]:
        return [ov for ov, _ in self.points]


def scalarize(inst: SopInstance, weights) -> SopInstance:
    """Fold the reward and detection channels into one reward via nonnegative
    weights (w_reward, w_cost, w_detection).

    Cost stays a hard budget constraint rather than entering the reward, so
    any solution of the scalarized instance is feasible for the original.
    """
    w = tuple(float(x) for x in weights)
    if len(w) != 3:
        raise ContractError("expected one weight per objective: (reward, cost, detection)")
    if any(x < 0 for x in w):
        raise ContractError("weights must be nonnegative")
    if all(x == 0 for x in w):
        raise ContractError("weights must not all be zero")
    w_r, _w_c, w_p = w
    rewards = w_r * inst.rewards + w_p * inst.detection
    return SopInstance(
        rewards=rewards,
        cluster_ids=inst.cluster_ids.copy(),
        cost=inst.cost.copy(),
        start=inst.start,
        budget=inst.budget,
        end=inst.end,
        detection=inst.detection.copy(),
    )


def epsilon_constraint(
    inst: SopInstance, primary: str = "reward", bounds: dict[str, float] | None = None
) -> SopSolution:
    """Maximize the primary objective subject to upper bounds on the others.

    Currently the reward objective with a cost bound is supported: the bound
    tightens the budget. Bounds no solution can meet yield the bare start
    path.
    """
    if primary != "reward":
        raise ContractError(f"unsupported primary objective {primary!r}")
    bounds = dict(bounds or {})
    eps_cost = float(bounds.pop("cost", inst.budget))
    if bounds:
        raise ContractError(f"unsupported epsilon bounds: {sorted(bounds)}")
    budget = min(inst.budget, eps_cost)
    if budget < 0:
        return evaluate(inst, [inst.start])
    return solve_exact(replace(inst, budget=budget))


@dataclass(frozen=True)
class EpsilonGrid:
    """Cost-bound sweep: `count` even steps over [0, B], explicit `values`,
    or `adaptive` descent that cuts just below each optimum's cost."""

    count: int = 10
    values: tuple[float, ...] | None = None
    adaptive: bool = False


def pareto_enumerate(
    inst: SopInstance, senses=REWARD_COST_SENSES, grid: EpsilonGrid | None = None
) -> ParetoFront:
    """Enumerate non-dominated (reward, cost) solutions via the epsilon sweep.

    Uses the exact solver, so instance size is capped by its cluster limit.
    """
    if tuple(senses) != REWARD_COST_SENSES:
        raise ContractError("only (reward MAX, cost MIN) enumeration is supported")
    grid = grid or EpsilonGrid()

    solutions: list[SopSolution] = []
    if grid.adaptive:
        eps = float(inst.budget)
        while eps >= 0:
            sol = epsilon_constraint(inst, "reward", {"cost": eps})
            solutions.append(sol)
            if len(sol.path) <= 1:
                break
            eps = float(np.nextafter(sol.total_cost, -np.inf))
    else:
        values = grid.values if grid.values is not None else np.linspace(0.0, inst.budget, grid.count)
        for eps in values:
            solutions.append(epsilon_constraint(inst, "reward", {"cost": float(eps)}))

    seen: set[tuple[float, float]] = set()
    candidates: list[tuple[ObjectiveVector, SopSolution]] = []
    for sol in solutions:
        ov = ObjectiveVector((sol.total_reward, sol.total_cost))
        key = (ov.reward, ov.cost)
        if key in seen:
            continue
        seen.add(key)
        candidates.append((ov, sol))

    front = [
        (ov, sol)
        for ov, sol in candidates
        if not any(dominates(other, ov, senses) for other, _ in candidates)
    ]
    front.sort(key=lambda p: (p[0].cost, -p[0].reward))
    return ParetoFront(front)


def front_to_csv(front: ParetoFront) -> str:
    lines = ["reward,cost,path"]
    for ov, sol in front.points:
        ids = " ".join(str(i) for i in sol.path)
        lines.append(f"{ov.reward!r},{ov.cost!r},{ids}")
    return "\n".join(lines) + "\n"
