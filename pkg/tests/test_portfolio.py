import dataclasses

import numpy as np
import pytest

from gridflex.errors import NoFeasibleScale
from gridflex.flex import MechanismKind
from gridflex.grid import LoadBus
from gridflex.portfolio import (
    FrontierPoint,
    PortfolioSettings,
    build_resources,
    derive_seed,
    evaluate_portfolio,
    frontier_search,
    marginal_curve,
    write_frontier_csv,
    write_sweep_csv,
)
from oracles import interruptible_covers, min_covering_scale

INT, RAT, INC = MechanismKind


def oracle_args(scenario):
    tl = scenario.timeline
    business = tl.load @ scenario.case.sector_weight_matrix[:, 1]
    return (tl.load, tl.gen_cap, tl.committed_mw, business, 250, 25, 350)


def test_deterministic_replications_identical(scenario9):
    p = evaluate_portfolio(PortfolioSettings(interruptible_scale=2.0), 5, scenario9)
    assert len(set(p.ens_samples)) == 1
    assert p.ens_ci is None
    assert p.ens == evaluate_portfolio(PortfolioSettings(interruptible_scale=2.0), 1, scenario9).ens


def test_incentive_needs_thirty_replications(scenario9):
    with pytest.raises(ValueError, match="30"):
        evaluate_portfolio(PortfolioSettings(incentive_coverage=0.2), 29, scenario9)
    with pytest.raises(ValueError):
        evaluate_portfolio(PortfolioSettings(), 0, scenario9)


def test_incentive_reproducible_with_interval(scenario9):
    settings = PortfolioSettings(incentive_coverage=0.2)
    a = evaluate_portfolio(settings, 100, scenario9)
    b = evaluate_portfolio(settings, 100, scenario9)
    assert (a.ens, a.ens_ci, a.ens_samples) == (b.ens, b.ens_ci, b.ens_samples)
    lo, hi = a.ens_ci
    assert lo <= a.ens <= hi
    assert len(set(a.ens_samples)) > 1


def test_parallel_matches_serial(scenario9):
    settings = PortfolioSettings(interruptible_scale=1.0, incentive_coverage=0.3)
    serial = evaluate_portfolio(settings, 30, scenario9)
    parallel = evaluate_portfolio(settings, 30, scenario9, jobs=2)
    assert serial.ens_samples == parallel.ens_samples


def test_seed_derivation():
    assert derive_seed(42, 0, 0) == derive_seed(42, 0, 0)
    seeds = {derive_seed(42, s, r) for s in range(3) for r in range(50)}
    assert len(seeds) == 150
    assert derive_seed(42, 0, 0) != derive_seed(43, 0, 0)


def test_build_resources():
    assert build_resources(PortfolioSettings(), None) == []


def test_covering_scale_gives_zero_ens(scenario9_relaxed):
    scale = min_covering_scale(oracle_args(scenario9_relaxed))
    assert evaluate_portfolio(PortfolioSettings(interruptible_scale=scale + 1e-6), 1, scenario9_relaxed).ens == 0
    assert evaluate_portfolio(PortfolioSettings(interruptible_scale=scale - 0.05), 1, scenario9_relaxed).ens > 0


def test_baseline_point_equals_no_dr(scenario9):
    curve = marginal_curve(RAT, [0.0, 0.1], scenario9)
    assert curve[0].ens == 8775


def test_grid_must_increase(scenario9):
    with pytest.raises(ValueError):
        marginal_curve(INT, [1, 1, 2], scenario9)


def test_rationing_marginal_effect_decays(scenario9):
    ens = [p.ens for p in marginal_curve(RAT, [0.0, 0.1, 0.2, 0.3], scenario9)]
    steps = -np.diff(ens)
    assert np.all(steps >= 0)
    assert np.all(np.diff(steps) <= 0)
    # Frozen from direct simulation of the fixture.
    assert ens == [8775, 6650, 4725, 2975]


def test_interruptible_curve_nonincreasing(scenario9):
    ens = [p.ens for p in marginal_curve(INT, [1, 2, 4, 8, 16], scenario9)]
    assert ens == sorted(ens, reverse=True)


def test_frontier_matches_peak_gap_oracle(scenario9_relaxed):
    (point,) = frontier_search(0.0, [0.0], scenario9_relaxed)
    oracle = min_covering_scale(oracle_args(scenario9_relaxed))
    assert oracle <= point.min_interruptible_scale <= oracle + 0.01
    assert interruptible_covers(point.min_interruptible_scale, *oracle_args(scenario9_relaxed))


def test_frontier_rationing_alone_suffices(scenario9):
    case = dataclasses.replace(
        scenario9.case, load_buses=tuple(LoadBus(lb.bus, (1.0, 0.0, 0.0)) for lb in scenario9.case.load_buses))
    (point,) = frontier_search(0.0, [1.0], dataclasses.replace(scenario9, case=case))
    assert point.min_interruptible_scale == 1.0


def test_frontier_upper_bracket(scenario9):
    with pytest.raises(NoFeasibleScale):
        frontier_search(0.0, [0.0], scenario9, upper=2.0)


def test_writers(tmp_path, scenario9):
    pts = marginal_curve(INT, [1, 2], scenario9)
    text = write_sweep_csv(tmp_path / "sweep.csv", INT, pts).read_text()
    assert text.splitlines() == [
        "mechanism,scale,ens_mean,ens_lo,ens_hi",
        "interruptible,1.000000,8150.000000,8150.000000,8150.000000",
        "interruptible,2.000000,7675.000000,7675.000000,7675.000000",
    ]
    f = write_frontier_csv(tmp_path / "frontier.csv", [FrontierPoint(0.0, 0.25, 12.5)]).read_text()
    assert f.splitlines() == ["incentive_coverage,rationing_max,min_interruptible_scale",
                              "0.000000,0.250000,12.500000"]
