"""Command-line interface.

Exit codes: 0 success, 1 invalid configuration or input data, 2 runtime
failure (non-convergence, no feasible frontier scale, solver errors).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from gridflex.config import (
    ScenarioConfig,
    build_scenario,
    load_config,
    missing_files,
    portfolio_settings,
)
from gridflex.errors import ConfigError, GridFlexError, ParseError, ValidationError
from gridflex.flex import MechanismKind

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def _report_violations(exc: Exception) -> None:
    print(f"error: {exc}", file=sys.stderr)
    for v in getattr(exc, "violations", ()) or ():
        print(f"  - {v}", file=sys.stderr)


def cmd_validate(cfg: ScenarioConfig, args) -> int:
    build_scenario(cfg)
    if "profiles" in cfg.paths:
        from gridflex.sectors import read_profiles

        read_profiles(cfg.paths["profiles"])
    print(f"ok: {cfg.source}")
    return EXIT_OK


def cmd_simulate(cfg: ScenarioConfig, args) -> int:
    from gridflex.engine import run_simulation
    from gridflex.metrics import shed_density, write_density_csv, write_report_csv
    from gridflex.portfolio import build_resources, derive_seed

    scenario = build_scenario(cfg)
    settings = portfolio_settings(cfg)
    engine = replace(scenario.engine, seed=derive_seed(cfg.seed, 0, 0))
    report = run_simulation(scenario.case, scenario.timeline, build_resources(settings, scenario), engine)

    total_shed = report.forced_shed_series() + report.mechanism_series(MechanismKind.INTERRUPTIBLE)
    report.density = shed_density(total_shed, cfg.kde_bandwidth_mw)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_report_csv(cfg.out_dir / "report.csv", report)
    write_density_csv(cfg.out_dir / "density.csv", report.density)

    print(f"ENS_MWh: {report.ens:.6f}")
    for kind in MechanismKind:
        print(f"{kind.value}_MWh: {report.mechanism_series(kind).sum():.6f}")
    print(f"total_shed_MWh: {total_shed.sum():.6f}")
    if report.correlation_vs_reference is not None:
        print(f"pearson_r: {report.correlation_vs_reference:.6f}")
    elif scenario.timeline.reference_shed is not None:
        print("pearson_r: undefined (constant series)")
    return EXIT_OK


def _replications(cfg: ScenarioConfig, stochastic: bool) -> int:
    if cfg.replications is not None:
        return cfg.replications
    return 30 if stochastic else 1


def cmd_sweep(cfg: ScenarioConfig, args) -> int:
    from gridflex.portfolio import marginal_curve, write_sweep_csv

    problems = []
    if cfg.sweep_mechanism is None:
        problems.append("sweep_mechanism: required for sweep")
    if not cfg.sweep_scales:
        problems.append("sweep_scales: required for sweep")
    if problems:
        raise ConfigError("sweep is not configured", problems)
    scenario = build_scenario(cfg)
    baseline = portfolio_settings(cfg)
    stochastic = baseline.stochastic or (cfg.sweep_mechanism is MechanismKind.INCENTIVE
                                         and max(cfg.sweep_scales) > 0)
    points = marginal_curve(cfg.sweep_mechanism, cfg.sweep_scales, scenario,
                            replications=_replications(cfg, stochastic), baseline=baseline, jobs=args.jobs)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(cfg.out_dir / "sweep.csv", cfg.sweep_mechanism, points)
    for p in points:
        print(f"{cfg.sweep_mechanism.value} {p.settings.value_of(cfg.sweep_mechanism):g}: ENS {p.ens:.6f} MWh")
    return EXIT_OK


def cmd_frontier(cfg: ScenarioConfig, args) -> int:
    from gridflex.portfolio import frontier_search, write_frontier_csv

    if not cfg.frontier_rationing:
        raise ConfigError("frontier is not configured", ["frontier_rationing: required for frontier"])
    scenario = build_scenario(cfg)
    points = frontier_search(
        cfg.frontier_incentive_coverage, sorted(cfg.frontier_rationing), scenario,
        tolerance=cfg.frontier_tolerance,
        replications=_replications(cfg, cfg.frontier_incentive_coverage > 0),
        upper=cfg.frontier_upper_scale, lower=cfg.frontier_lower_scale, jobs=args.jobs,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_frontier_csv(cfg.out_dir / "frontier.csv", points)
    for p in points:
        print(f"rationing {p.rationing_max:g}: min interruptible scale {p.min_interruptible_scale:.6f}")
    return EXIT_OK


def cmd_profile_estimate(cfg: ScenarioConfig, args) -> int:
    from gridflex.sectors import estimate_sector_capacities, hourly_sector_mw, read_profiles, write_sectors

    if "profiles" not in cfg.paths:
        raise ConfigError("profile-estimate is not configured", ["profiles: required for profile-estimate"])
    missing = [m for m in missing_files(cfg) if m.startswith("profiles:")]
    if missing:
        raise ConfigError("missing input files", missing)
    profiles = read_profiles(cfg.paths["profiles"])
    caps = estimate_sector_capacities(profiles)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.out_dir / "sector_capacities.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r_max_mw", "b_max_mw", "o_max_mw", "residual_mw"])
        w.writerow([f"{v:.6f}" for v in (*caps.as_array(), caps.residual)])
    write_sectors(cfg.out_dir / "sectors.csv", profiles, hourly_sector_mw(profiles, caps))
    print(f"r_max_mw: {caps.r_max:.6f}\nb_max_mw: {caps.b_max:.6f}\no_max_mw: {caps.o_max:.6f}\n"
          f"residual_mw: {caps.residual:.6f}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "frontier": cmd_frontier,
    "profile-estimate": cmd_profile_estimate,
}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("jobs must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="scenario config file")
    common.add_argument("--out", type=Path, default=None, help="output directory (overrides out_dir)")
    common.add_argument("--seed", type=_u64, default=None, help="master seed override")
    common.add_argument("--jobs", type=_positive, default=1, help="worker processes for replications")
    parser = argparse.ArgumentParser(prog="gridflex", description="Grid scarcity and demand-flexibility simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "check config and input data",
        "simulate": "run one scenario, write report.csv and density.csv",
        "sweep": "ENS against one mechanism's scale, write sweep.csv",
        "frontier": "minimal interruptible scale for zero ENS, write frontier.csv",
        "profile-estimate": "fit sector capacities from load profiles",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config).with_overrides(out_dir=args.out, seed=args.seed)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ParseError, ValidationError, ValueError) as exc:
        _report_violations(exc)
        return EXIT_INVALID
    except GridFlexError as exc:
        _report_violations(exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
