"""Scale sweeps, replication statistics and zero-outage frontiers.

Seeds: replication ``r`` of scenario ``s`` under master seed ``m`` uses
``SeedSequence(entropy=m, spawn_key=(s, r))``. Sweep and frontier points all
use scenario index 0, so every grid point sees the same incentive draws
(common random numbers) and curves are not blurred by sampling noise.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from gridflex.engine import CachedSolver, EngineConfig, run_simulation
from gridflex.errors import NoFeasibleScale
from gridflex.flex import FlexResource, IncentiveModel, MechanismKind, default_resource
from gridflex.grid import GridCase
from gridflex.timeline import ScenarioTimeline

MIN_STOCHASTIC_REPLICATIONS = 30
_FIELD = {
    MechanismKind.INTERRUPTIBLE: "interruptible_scale",
    MechanismKind.RATIONING: "rationing_max",
    MechanismKind.INCENTIVE: "incentive_coverage",
}


@dataclass(frozen=True)
class PortfolioSettings:
    interruptible_scale: float = 0.0  # multiplier on committed interruptible MW
    rationing_max: float = 0.0  # maximum rationed share of residential load
    incentive_coverage: float = 0.0  # share of residential customers enrolled

    @property
    def stochastic(self) -> bool:
        return self.incentive_coverage > 0

    def value_of(self, kind) -> float:
        return getattr(self, _FIELD[MechanismKind(kind)])

    def with_mechanism(self, kind, value: float) -> PortfolioSettings:
        return replace(self, **{_FIELD[MechanismKind(kind)]: value})


@dataclass(frozen=True)
class Scenario:
    """Everything a portfolio evaluation needs besides the portfolio itself."""

    case: GridCase
    timeline: ScenarioTimeline
    engine: EngineConfig
    incentive_model: IncentiveModel = field(default_factory=IncentiveModel)
    interruptible: FlexResource = field(default_factory=lambda: default_resource(MechanismKind.INTERRUPTIBLE))
    rationing: FlexResource = field(default_factory=lambda: default_resource(MechanismKind.RATIONING))


@dataclass(frozen=True)
class PortfolioPoint:
    interruptible_scale: float
    rationing_max: float
    incentive_coverage: float
    ens: float  # mean over replications, MWh
    ens_ci: tuple[float, float] | None = None
    ens_samples: tuple[float, ...] = ()

    @property
    def settings(self) -> PortfolioSettings:
        return PortfolioSettings(self.interruptible_scale, self.rationing_max, self.incentive_coverage)


@dataclass(frozen=True)
class FrontierPoint:
    incentive_coverage: float
    rationing_max: float
    min_interruptible_scale: float


def build_resources(settings: PortfolioSettings, scenario: Scenario) -> list[FlexResource]:
    out = []
    if settings.interruptible_scale > 0:
        out.append(scenario.interruptible.with_scale(settings.interruptible_scale))
    if settings.rationing_max > 0:
        out.append(scenario.rationing.with_p_max(settings.rationing_max))
    if settings.incentive_coverage > 0:
        model = replace(scenario.incentive_model, coverage=settings.incentive_coverage)
        out.append(replace(default_resource(MechanismKind.INCENTIVE), p_max=model))
    return out


def derive_seed(master: int, scenario_index: int, replication: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(scenario_index), int(replication)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _replication_ens(scenario: Scenario, settings: PortfolioSettings, seed: int, solver=None) -> float:
    cfg = replace(scenario.engine, seed=seed)
    report = run_simulation(scenario.case, scenario.timeline, build_resources(settings, scenario), cfg,
                            solver=solver if solver is not None else CachedSolver())
    return report.ens


def _run_many(tasks, scenario: Scenario, jobs: int) -> list[float]:
    """ENS for each (settings, seed) task, in task order."""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_replication_ens, scenario, s, seed) for s, seed in tasks]
            return [f.result() for f in futures]
    solver = CachedSolver()
    return [_replication_ens(scenario, s, seed, solver) for s, seed in tasks]


def _summarise(settings: PortfolioSettings, values: list[float]) -> PortfolioPoint:
    arr = np.asarray(values, dtype=float)
    ci = None
    if settings.stochastic:
        lo, hi = np.percentile(arr, [2.5, 97.5])
        ci = (float(lo), float(hi))
    return PortfolioPoint(settings.interruptible_scale, settings.rationing_max, settings.incentive_coverage,
                          float(arr.mean()), ci, tuple(float(v) for v in arr))


def _check_replications(settings: PortfolioSettings, replications: int):
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if settings.stochastic and replications < MIN_STOCHASTIC_REPLICATIONS:
        raise ValueError(
            f"incentive portfolios need >= {MIN_STOCHASTIC_REPLICATIONS} replications, got {replications}"
        )


def evaluate_portfolio(settings: PortfolioSettings, replications: int, scenario: Scenario,
                       scenario_index: int = 0, jobs: int = 1) -> PortfolioPoint:
    """Mean ENS (and a 95% percentile band when stochastic) over seeded replications."""
    _check_replications(settings, replications)
    master = scenario.engine.seed
    tasks = [(settings, derive_seed(master, scenario_index, r)) for r in range(replications)]
    return _summarise(settings, _run_many(tasks, scenario, jobs))


def marginal_curve(mechanism, scale_grid, scenario: Scenario, replications: int = 1,
                   baseline: PortfolioSettings = PortfolioSettings(), jobs: int = 1) -> list[PortfolioPoint]:
    """ENS as one mechanism's scale varies, the others held at ``baseline``."""
    grid = [float(s) for s in scale_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("scale grid must be strictly increasing")
    points = [baseline.with_mechanism(mechanism, s) for s in grid]
    for p in points:
        _check_replications(p, replications)
    master = scenario.engine.seed
    tasks = [(p, derive_seed(master, 0, r)) for p in points for r in range(replications)]
    values = _run_many(tasks, scenario, jobs)
    return [_summarise(p, values[i * replications:(i + 1) * replications]) for i, p in enumerate(points)]


def frontier_search(incentive_coverage: float, rationing_grid, scenario: Scenario, tolerance: float = 0.01,
                    replications: int = 1, upper: float = 50.0, lower: float = 1.0,
                    jobs: int = 1) -> list[FrontierPoint]:
    """Smallest interruptible scale with zero ENS, per rationing level.

    "Zero" means zero in every replication of the seeded set. Bisection keeps
    ``lower`` (or the last failing scale) below and a zero-ENS scale above
    until they are within ``tolerance``; the zero-ENS end is returned.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    master = scenario.engine.seed
    seeds = [derive_seed(master, 0, r) for r in range(replications)]
    out = []
    solver = CachedSolver() if jobs <= 1 else None

    def avoids_outage(scale: float, rationing: float) -> bool:
        settings = PortfolioSettings(scale, rationing, incentive_coverage)
        _check_replications(settings, replications)
        if solver is not None:
            return all(_replication_ens(scenario, settings, s, solver) == 0.0 for s in seeds)
        return max(_run_many([(settings, s) for s in seeds], scenario, jobs)) == 0.0

    for rationing in rationing_grid:
        rationing = float(rationing)
        if avoids_outage(lower, rationing):
            out.append(FrontierPoint(incentive_coverage, rationing, lower))
            continue
        if not avoids_outage(upper, rationing):
            raise NoFeasibleScale(
                f"interruptible scale {upper} still leaves ENS > 0 at rationing {rationing}, "
                f"incentive coverage {incentive_coverage}"
            )
        lo, hi = lower, upper
        while hi - lo > tolerance:
            mid = 0.5 * (lo + hi)
            if avoids_outage(mid, rationing):
                hi = mid
            else:
                lo = mid
        out.append(FrontierPoint(incentive_coverage, rationing, hi))
    return out


def write_sweep_csv(path, mechanism, points: list[PortfolioPoint]) -> Path:
    kind = MechanismKind(mechanism)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mechanism", "scale", "ens_mean", "ens_lo", "ens_hi"])
        for p in points:
            scale = p.settings.value_of(kind)
            lo, hi = p.ens_ci if p.ens_ci is not None else (p.ens, p.ens)
            w.writerow([kind.value, f"{scale:.6f}", f"{p.ens:.6f}", f"{lo:.6f}", f"{hi:.6f}"])
    return path


def write_frontier_csv(path, points: list[FrontierPoint]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["incentive_coverage", "rationing_max", "min_interruptible_scale"])
        for p in points:
            w.writerow([f"{p.incentive_coverage:.6f}", f"{p.rationing_max:.6f}", f"{p.min_interruptible_scale:.6f}"])
    return path
