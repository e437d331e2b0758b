"""Trial-batch orchestration: seeded benchmark runs, the path-length-weighted
success metric, and CSV/SVG report emission.

Every trial derives its seed as ``base_seed XOR trial_index``; all planners
in a batch face bit-identical workspaces and placements, so comparisons are
paired. Reports are byte-reproducible for a fixed configuration.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernels
from .errors import ConfigError, ContractError
from .planners import PlannerConfig, PLANNERS, default_step_cap, run_episode
from .sensing import SensorConfig
from .world import (
    EntityPlacement,
    PlacementParams,
    Pose,
    WorldParams,
    Workspace,
    generate_workspace,
    place_entities,
)


@dataclass(frozen=True)
class EpisodeResult:
    config: str
    planner: str
    trial: int
    seed: int
    success: bool
    traveled_m: float  # p_i
    shortest_m: float  # l_i, on the ground-truth map
    steps: int
    reason: str


@dataclass(frozen=True)
class SummaryRow:
    config: str
    planner: str
    spl: float
    successes: int
    trials: int


@dataclass
class SplReport:
    rows: list[EpisodeResult]
    summary: list[SummaryRow]


@dataclass
class BenchmarkConfig:
    world: WorldParams = field(default_factory=WorldParams)
    placement: PlacementParams = field(default_factory=PlacementParams)
    L_m: float | list = 100.0
    R_m: float | list = 3.0
    M: int | list = 10
    trials: int = 100
    base_seed: int = 0
    planners: tuple[str, ...] = ("sop", "frontier")
    occlusion: bool = True
    explore_weight: float = 0.5
    vns_iters: int = 60
    exact_cluster_limit: int = 7
    jobs: int = 1

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for p in self.planners:
            if p not in PLANNERS:
                raise ConfigError(f"unknown planner {p!r}")
        for v in self.blocks():
            _, L, R, M = v
            if not (L > R > 0):
                raise ConfigError("need L > R > 0")
            if M < 1:
                raise ConfigError("M must be >= 1")

    def blocks(self) -> list[tuple[str, float, float, int]]:
        Ls = self.L_m if isinstance(self.L_m, (list, tuple)) else [self.L_m]
        Rs = self.R_m if isinstance(self.R_m, (list, tuple)) else [self.R_m]
        Ms = self.M if isinstance(self.M, (list, tuple)) else [self.M]
        out = []
        for L in Ls:
            for R in Rs:
                for M in Ms:
                    out.append((f"L{L:g}_R{R:g}_M{M}", float(L), float(R), int(M)))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkConfig":
        data = dict(data)
        world = WorldParams.from_dict(data.pop("world", {}))
        placement_data = data.pop("placement", {})
        unknown = set(placement_data) - set(PlacementParams.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown placement parameters: {sorted(unknown)}")
        if "decoy_relevance" in placement_data:
            placement_data["decoy_relevance"] = tuple(placement_data["decoy_relevance"])
        placement = PlacementParams(**placement_data)
        if "planners" in data:
            data["planners"] = tuple(data["planners"])
        unknown = set(data) - (set(cls.__dataclass_fields__) - {"world", "placement"})
        if unknown:
            raise ConfigError(f"unknown benchmark parameters: {sorted(unknown)}")
        return cls(world=world, placement=placement, **data)

    @classmethod
    def from_file(cls, path) -> "BenchmarkConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def shortest_path_length(
    ws: Workspace, start: Pose, target: Pose, success_radius_cells: int = 0
) -> float:
    """Ground-truth shortest path in meters from start to the target (or, with
    a success radius, to the nearest cell within that radius of it)."""
    sr, sc = ws.pose_to_cell(start)
    tr, tc = ws.pose_to_cell(target)
    if ws.cells[sr, sc] != 0 or ws.cells[tr, tc] != 0:
        raise ContractError("start/target must sit on free cells")
    dist, _ = kernels.dijkstra_field((ws.cells == 0).astype(np.uint8), sr, sc)
    H, W = ws.shape
    rad = success_radius_cells
    best = np.inf
    for r in range(max(0, tr - rad), min(H, tr + rad + 1)):
        for c in range(max(0, tc - rad), min(W, tc + rad + 1)):
            if dist[r, c] < best:
                best = dist[r, c]
    if not np.isfinite(best):
        raise ContractError("target unreachable on the ground-truth map")
    return float(best) * ws.resolution_m


def compute_spl(results: list[EpisodeResult]) -> float:
    """Mean over trials of S_i * l_i / max(p_i, l_i)."""
    if not results:
        raise ContractError("cannot compute the metric over an empty result list")
    total = 0.0
    for r in results:
        if not r.success:
            continue
        denom = max(r.traveled_m, r.shortest_m)
        total += 1.0 if denom == 0 else r.shortest_m / denom
    return total / len(results)


def _planner_cfg(cfg: BenchmarkConfig, R: float) -> PlannerConfig:
    return PlannerConfig(
        short_range_m=R,
        explore_weight=cfg.explore_weight,
        vns_iters=cfg.vns_iters,
        exact_cluster_limit=cfg.exact_cluster_limit,
    )


def _run_trial(payload) -> list[EpisodeResult]:
    cfg_dict, label, L, R, M, trial = payload
    cfg = BenchmarkConfig.from_dict(cfg_dict)
    seed = cfg.base_seed ^ trial
    ws = generate_workspace(seed, cfg.world)
    placement_params = PlacementParams(
        min_separation_cells=cfg.placement.min_separation_cells,
        min_target_start_m=max(cfg.placement.min_target_start_m, R),
        target_mode=cfg.placement.target_mode,
        target_offset_m=cfg.placement.target_offset_m,
        relevance_mode=cfg.placement.relevance_mode,
        decoy_relevance=cfg.placement.decoy_relevance,
    )
    placement = place_entities(seed, ws, M, placement_params)
    sensors = SensorConfig(long_range_m=L, short_range_m=R, occlusion=cfg.occlusion)
    shortest = shortest_path_length(ws, placement.start, placement.target, success_radius_cells=1)
    rows = []
    for planner in cfg.planners:
        outcome = run_episode(ws, placement, sensors, planner, _planner_cfg(cfg, R))
        rows.append(
            EpisodeResult(
                config=label,
                planner=planner,
                trial=trial,
                seed=seed,
                success=outcome.success,
                traveled_m=outcome.traveled_m,
                shortest_m=shortest,
                steps=outcome.steps,
                reason=outcome.reason,
            )
        )
    return rows


def _config_payload(cfg: BenchmarkConfig) -> dict:
    payload = asdict(cfg)
    payload["planners"] = list(cfg.planners)
    payload["placement"]["decoy_relevance"] = list(cfg.placement.decoy_relevance)
    return payload


def run_benchmark(cfg: BenchmarkConfig) -> SplReport:
    """Run every (L, R, M) block for every planner over paired trial seeds."""
    cfg.validate()
    payload = _config_payload(cfg)
    tasks = [
        (payload, label, L, R, M, trial)
        for (label, L, R, M) in cfg.blocks()
        for trial in range(cfg.trials)
    ]
    jobs = max(1, int(cfg.jobs))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_trial, tasks, chunksize=4))
    else:
        chunks = [_run_trial(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.config, r.trial, r.planner))

    summary = []
    for label, *_ in cfg.blocks():
        for planner in cfg.planners:
            group = [r for r in rows if r.config == label and r.planner == planner]
            summary.append(
                SummaryRow(
                    config=label,
                    planner=planner,
                    spl=compute_spl(group) if group else 0.0,
                    successes=sum(r.success for r in group),
                    trials=len(group),
                )
            )
    return SplReport(rows=rows, summary=summary)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

TRIALS_HEADER = "config,planner,trial,seed,success,traveled_m,shortest_m,steps,reason"
SUMMARY_HEADER = "config,planner,spl,successes,trials"


def trials_csv(report: SplReport) -> str:
    lines = [TRIALS_HEADER]
    for r in report.rows:
        lines.append(
            f"{r.config},{r.planner},{r.trial},{r.seed},{int(r.success)},"
            f"{r.traveled_m!r},{r.shortest_m!r},{r.steps},{r.reason}"
        )
    return "\n".join(lines) + "\n"


def summary_csv(report: SplReport) -> str:
    lines = [SUMMARY_HEADER]
    for s in report.summary:
        lines.append(f"{s.config},{s.planner},{s.spl!r},{s.successes},{s.trials}")
    return "\n".join(lines) + "\n"


def read_trials_csv(text: str) -> list[EpisodeResult]:
    lines = text.strip().splitlines()
    if not lines or lines[0] != TRIALS_HEADER:
        raise ContractError("unexpected trials CSV header")
    rows = []
    for line in lines[1:]:
        config, planner, trial, seed, success, traveled, shortest, steps, reason = line.split(",", 8)
        rows.append(
            EpisodeResult(
                config=config,
                planner=planner,
                trial=int(trial),
                seed=int(seed),
                success=bool(int(success)),
                traveled_m=float(traveled),
                shortest_m=float(shortest),
                steps=int(steps),
                reason=reason,
            )
        )
    return rows


_SVG_COLORS = ("#4878a8", "#d1605e", "#6aa56e", "#b8860b")


def spl_svg(report: SplReport) -> str:
    """Grouped bar chart (planner x config) of the summary metric."""
    configs = sorted({s.config for s in report.summary})
    planners = sorted({s.planner for s in report.summary})
    by_key = {(s.config, s.planner): s.spl for s in report.summary}
    width = max(320, 90 * max(1, len(configs)) + 120)
    height = 260
    plot_h = 180
    bar_w = 60 / max(1, len(planners))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="50" y1="{20 + plot_h}" x2="{width - 20}" y2="{20 + plot_h}" stroke="black"/>',
        f'<line x1="50" y1="20" x2="50" y2="{20 + plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = 20 + plot_h - frac * plot_h
        parts.append(
            f'<text x="44" y="{y + 4:.1f}" font-size="10" text-anchor="end">{frac:g}</text>'
        )
        parts.append(f'<line x1="47" y1="{y:.1f}" x2="50" y2="{y:.1f}" stroke="black"/>')
    for ci, config in enumerate(configs):
        gx = 60 + ci * 90
        for pi, planner in enumerate(planners):
            spl = by_key.get((config, planner), 0.0)
            h = spl * plot_h
            x = gx + pi * bar_w
            y = 20 + plot_h - h
            color = _SVG_COLORS[pi % len(_SVG_COLORS)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w - 2:.1f}" height="{h:.1f}" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{y - 3:.1f}" font-size="8" text-anchor="middle">{spl:.3f}</text>'
            )
        parts.append(
            f'<text x="{gx + 30:.1f}" y="{20 + plot_h + 14}" font-size="10" text-anchor="middle">{config}</text>'
        )
    for pi, planner in enumerate(planners):
        color = _SVG_COLORS[pi % len(_SVG_COLORS)]
        y = 20 + pi * 14
        parts.append(f'<rect x="{width - 110}" y="{y - 8}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{width - 96}" y="{y + 1}" font-size="10">{planner}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: SplReport, out_dir) -> list[str]:
    """Write trials.csv, summary.csv and spl.svg under `out_dir`."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for name, text in (
            ("trials.csv", trials_csv(report)),
            ("summary.csv", summary_csv(report)),
            ("spl.svg", spl_svg(report)),
        ):
            path = os.path.join(out_dir, name)
            with open(path, "w") as fh:
                fh.write(text)
            paths.append(path)
        return paths
    except OSError as exc:
        raise ContractError(f"cannot write report under {out_dir!r}: {exc}") from exc
