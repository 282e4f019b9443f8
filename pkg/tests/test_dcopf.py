import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcopf_cases import cases
from gridflex.dcopf import SnapshotInput, balance_residual, solve_dcopf, total_reserve
from gridflex.errors import NumericalError, ValidationError
from gridflex.grid import Branch, Bus, Generator, GridCase, LoadBus
from oracles import dcopf_vertex_oracle

TRIANGLE = [(1, 2, 0.1), (2, 3, 0.1), (1, 3, 0.1)]


def two_bus(limit):
    return GridCase((Bus(1, is_slack=True), Bus(2)), (Branch(1, 2, 0.1, limit),),
                    (Generator(1, 1, 100, 1),), (LoadBus(2, (1.0, 0.0, 0.0)),))


def triangle(limit):
    return GridCase((Bus(1, is_slack=True), Bus(2), Bus(3)),
                    tuple(Branch(i, j, x, limit) for i, j, x in TRIANGLE),
                    (Generator(1, 1, 60, 1), Generator(2, 2, 60, 2)), (LoadBus(3, (1.0, 0.0, 0.0)),))


def test_two_bus_single_path():
    r = solve_dcopf(SnapshotInput(two_bus(60), [100], [50]))
    assert r.feasible
    assert r.dispatch == pytest.approx([50], abs=1e-6)
    assert r.flows == pytest.approx([50], abs=1e-6)


def test_two_bus_congested_is_infeasible():
    assert not solve_dcopf(SnapshotInput(two_bus(40), [100], [50])).feasible


def test_triangle_limit_40_infeasible_like_oracle():
    # Two 40 MW lines into bus 3 cannot deliver 90 MW.
    oracle = dcopf_vertex_oracle([1, 2, 3], 1, [(i, j, x, 40) for i, j, x in TRIANGLE],
                                 [(1, 60, 1), (2, 60, 2)], {3: 90})
    assert oracle is None
    assert not solve_dcopf(SnapshotInput(triangle(40), [60, 60], [90])).feasible


def test_triangle_limit_50_matches_oracle():
    cost, dispatch = dcopf_vertex_oracle([1, 2, 3], 1, [(i, j, x, 50) for i, j, x in TRIANGLE],
                                         [(1, 60, 1), (2, 60, 2)], {3: 90})
    r = solve_dcopf(SnapshotInput(triangle(50), [60, 60], [90]))
    assert r.cost == pytest.approx(cost, rel=1e-6)
    assert r.dispatch == pytest.approx(dispatch, abs=1e-6)
    # Frozen from the oracle: 60 MW cheap unit, 30 MW from bus 2.
    assert r.dispatch == pytest.approx([60, 30], abs=1e-6)
    assert r.flows == pytest.approx([10, 40, 50], abs=1e-6)


@pytest.mark.parametrize("case, caps, load, args", cases(seed=7, count=60))
def test_random_small_cases_match_oracle(case, caps, load, args):
    oracle = dcopf_vertex_oracle(*args)
    snap = SnapshotInput(case, caps, load)
    r = solve_dcopf(snap)
    assert r.feasible == (oracle is not None)
    if oracle is None:
        return
    assert r.cost == pytest.approx(oracle[0], rel=1e-6, abs=1e-9)
    assert np.all(np.abs(r.flows) <= np.array([b.limit for b in case.branches]) + 1e-6)
    assert np.max(np.abs(balance_residual(snap, r)), initial=0) <= 1e-6
    assert np.all(r.dispatch <= caps + 1e-6) and np.all(r.dispatch >= -1e-6)


def test_tie_break_prefers_lower_generator_id():
    case = GridCase((Bus(1, is_slack=True), Bus(2)), (Branch(1, 2, 0.1, 500),),
                    (Generator(5, 2, 100, 3), Generator(2, 1, 100, 3)), (LoadBus(2, (1.0, 0.0, 0.0)),))
    r = solve_dcopf(SnapshotInput(case, [100, 100], [120]))
    assert r.dispatch == pytest.approx([20, 100], abs=1e-6)


def test_slack_angle_zero(case9, timeline9):
    r = solve_dcopf(SnapshotInput(case9, timeline9.gen_cap[0], timeline9.load[0]))
    assert r.feasible
    assert r.angles[case9.slack_index] == 0.0


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(0.2, 1.0))
def test_conservation_on_fixture(case9, timeline9, scale):
    load = timeline9.load[10] * scale
    r = solve_dcopf(SnapshotInput(case9, timeline9.gen_cap[10], load))
    assert r.feasible
    assert r.dispatch.sum() == pytest.approx(load.sum(), abs=1e-6)


def test_reserve_examples(case9):
    two = two_bus(100)
    assert total_reserve(SnapshotInput(two, [100], [80])) == pytest.approx(20)
    assert total_reserve(SnapshotInput(two, [100], [95]), restored_shed=10) == pytest.approx(15)


def test_reserve_fixture_hour5(timeline9, case9):
    # Hand sum of the hour-5 rows of capacity.csv and timeline.csv.
    expected = (1599 + 1300 + 900) - (509 + 416 + 625 + 763)
    assert expected == 1486
    assert total_reserve(SnapshotInput(case9, timeline9.gen_cap[5], timeline9.load[5])) == expected


def test_input_validation():
    with pytest.raises(NumericalError):
        SnapshotInput(two_bus(60), [np.nan], [10])
    with pytest.raises(ValidationError):
        SnapshotInput(two_bus(60), [150], [10])
    with pytest.raises(ValidationError):
        SnapshotInput(two_bus(60), [50], [-1])
    with pytest.raises(ValueError):
        total_reserve(SnapshotInput(two_bus(60), [50], [1]), restored_shed=-1)
