"""Hour-by-hour load shedding and restoration with demand flexibility.

Each hour starts from the counterfactual load, applies demand-response
mechanisms in priority order within their ramp and capacity limits, and
only then adjusts forced shedding in ``shed_step`` increments until the
snapshot is DCOPF-feasible with at least ``p_r_min`` of reserve. Shedding
carried from the previous hour is restored in the same increments when the
reserve allows.

Forced shedding lives on the grid ``k * shed_step`` (capped at the load that
remains after demand response) and is spread over buses in proportion to
that remaining load.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from gridflex.constants import (
    DEFAULT_INTERRUPT_THRESHOLD_MW,
    DEFAULT_P_R_MIN_MW,
    DEFAULT_SHED_STEP_MW,
)
from gridflex.dcopf import DispatchResult, SnapshotInput, solve_dcopf
from gridflex.errors import DegenerateSeries, NonConvergence, ValidationError
from gridflex.flex import (
    ActivationState,
    FlexResource,
    MechanismKind,
    allocate_reduction,
    interruptible_trigger,
    ramp_window,
    sample_incentive_capacity,
    step_activation,
)
from gridflex.grid import GridCase
from gridflex.metrics import SimulationReport, ens, pearson
from gridflex.timeline import ScenarioTimeline

_EPS = 1e-9

DEFAULT_ORDER = (MechanismKind.INTERRUPTIBLE, MechanismKind.RATIONING, MechanismKind.INCENTIVE)


@dataclass(frozen=True)
class EngineConfig:
    p_r_min: float = DEFAULT_P_R_MIN_MW
    shed_step: float = DEFAULT_SHED_STEP_MW
    interrupt_threshold: float = DEFAULT_INTERRUPT_THRESHOLD_MW
    mechanism_order: tuple[MechanismKind, ...] = DEFAULT_ORDER
    max_iterations_per_hour: int | None = None  # None: ceil(load / shed_step) + 16
    seed: int = 0

    def __post_init__(self):
        order = tuple(MechanismKind(k) for k in self.mechanism_order)
        object.__setattr__(self, "mechanism_order", order)
        if sorted(k.value for k in order) != sorted(k.value for k in MechanismKind):
            raise ValidationError(f"mechanism_order must be a permutation of all mechanisms, got {order}")
        if not self.p_r_min >= 0:
            raise ValidationError("p_r_min must be >= 0")
        if not self.shed_step > 0:
            raise ValidationError("shed_step must be > 0")
        if not self.interrupt_threshold > 0:
            raise ValidationError("interrupt_threshold must be > 0")
        if self.max_iterations_per_hour is not None and self.max_iterations_per_hour < 1:
            raise ValidationError("max_iterations_per_hour must be >= 1")

    def iteration_cap(self, total_load: float) -> int:
        if self.max_iterations_per_hour is not None:
            return self.max_iterations_per_hour
        return math.ceil(total_load / self.shed_step) + 16


@dataclass(frozen=True)
class HourInput:
    hour: int
    load: np.ndarray  # counterfactual MW per load bus
    gen_cap: np.ndarray  # available MW per generator
    committed_mw: float = 0.0  # interruptible commitment this hour


@dataclass
class SimulationState:
    hour: int
    shed: np.ndarray  # forced shed per load bus carried from the previous hour
    resource_states: dict[MechanismKind, ActivationState] = field(default_factory=dict)
    rationing_frac: float = 0.0  # active rationing share of residential load
    incentive_cap: float = 0.0  # capacity of the running incentive episode

    @classmethod
    def initial(cls, case: GridCase, first_hour: int = 0) -> SimulationState:
        states = {k: ActivationState(now=first_hour - 1) for k in MechanismKind}
        return cls(hour=first_hour, shed=np.zeros(len(case.load_buses)), resource_states=states)

    @property
    def shed_total(self) -> float:
        return float(self.shed.sum())


@dataclass
class HourResult:
    hour: int
    counterfactual: np.ndarray  # MW per load bus
    served: np.ndarray
    forced_shed: np.ndarray
    dr: dict[MechanismKind, np.ndarray]
    reserve: float
    feasible: bool
    dispatch: DispatchResult
    incentive_signaled: bool = False
    dcopf_calls: int = 0

    @property
    def forced_shed_total(self) -> float:
        return float(self.forced_shed.sum())

    def dr_total(self, kind) -> float:
        v = self.dr.get(MechanismKind(kind))
        return 0.0 if v is None else float(v.sum())

    def balance_error(self) -> float:
        """Max per-bus |served + shed + DR - counterfactual| (MW)."""
        total = self.served + self.forced_shed + sum(self.dr.values())
        return float(np.max(np.abs(total - self.counterfactual), initial=0.0))


class CachedSolver:
    """Memoises DCOPF results by (capacity, load) snapshot.

    Sweeps re-solve identical non-scarcity hours many times; one instance per
    scenario evaluation keeps the cache free of shared state.
    """

    def __init__(self, maxsize: int = 100_000):
        self.maxsize = maxsize
        self._cache: OrderedDict[tuple, DispatchResult] = OrderedDict()
        self._cases: dict[int, GridCase] = {}  # pins cases so their ids stay unique
        self.calls = 0
        self.hits = 0

    def __call__(self, snapshot: SnapshotInput) -> DispatchResult:
        self.calls += 1
        self._cases.setdefault(id(snapshot.case), snapshot.case)
        key = (id(snapshot.case), np.round(snapshot.gen_cap, 9).tobytes(), np.round(snapshot.load, 9).tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            self.hits += 1
            self._cache.move_to_end(key)
            return hit
        res = solve_dcopf(snapshot)
        self._cache[key] = res
        if len(self._cache) > self.maxsize:
            self._cache.popitem(last=False)
        return res


@dataclass
class _Eval:
    dr: dict[MechanismKind, np.ndarray]
    shed: np.ndarray
    served: np.ndarray
    reserve: float
    result: DispatchResult

    @property
    def feasible(self) -> bool:
        return self.result.feasible


def hour_rng(seed: int, hour: int) -> np.random.Generator:
    """Per-hour stream so a scenario's draws do not depend on earlier branches."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), int(hour) & (2**63 - 1)]))


def _resource_map(resources) -> dict[MechanismKind, FlexResource]:
    out: dict[MechanismKind, FlexResource] = {}
    for r in resources or ():
        if r.kind in out:
            raise ValidationError(f"more than one {r.kind.value} resource supplied")
        out[r.kind] = r
    return out


def run_hour(case: GridCase, hour_input: HourInput, state: SimulationState, resources,
             cfg: EngineConfig, solver=solve_dcopf) -> tuple[HourResult, SimulationState]:
    """Advance the simulation by one hour."""
    if hour_input.hour != state.hour:
        raise ValidationError(f"state is at hour {state.hour}, input is for hour {hour_input.hour}")
    load0 = np.asarray(hour_input.load, dtype=float)
    caps = np.asarray(hour_input.gen_cap, dtype=float)
    if load0.shape != (len(case.load_buses),) or caps.shape != (len(case.generators),):
        raise ValidationError("hour input does not match the case dimensions")
    res_map = _resource_map(resources)
    step = cfg.shed_step
    p_r_min = cfg.p_r_min
    weights = case.sector_weight_matrix
    residential = load0 * weights[:, 0]
    business = load0 * weights[:, 1]
    res_total = float(residential.sum())
    cap_total = float(caps.sum())

    cache: dict[tuple, _Eval] = {}
    n_calls = [0]

    def evaluate(levels: dict[MechanismKind, float], shed_total: float) -> _Eval:
        key = (round(levels[MechanismKind.INTERRUPTIBLE], 9), round(levels[MechanismKind.RATIONING], 9),
               round(levels[MechanismKind.INCENTIVE], 9), round(shed_total, 9))
        hit = cache.get(key)
        if hit is not None:
            return hit
        dr_i = allocate_reduction(levels[MechanismKind.INTERRUPTIBLE], business)
        frac = levels[MechanismKind.RATIONING] / res_total if res_total > 0 else 0.0
        dr_r = residential * frac
        dr_c = allocate_reduction(levels[MechanismKind.INCENTIVE], np.clip(residential - dr_r, 0.0, None),
                                  weights=residential)
        remaining = np.clip(load0 - dr_i - dr_r - dr_c, 0.0, None)
        shed = allocate_reduction(min(shed_total, float(remaining.sum())), remaining)
        served = np.clip(remaining - shed, 0.0, None)
        n_calls[0] += 1
        result = solver(SnapshotInput(case, caps, served))
        ev = _Eval(
            dr={MechanismKind.INTERRUPTIBLE: dr_i, MechanismKind.RATIONING: dr_r, MechanismKind.INCENTIVE: dr_c},
            shed=shed, served=served, reserve=cap_total - float(served.sum()), result=result,
        )
        cache[key] = ev
        return ev

    def ok(ev: _Eval, floor: float = p_r_min) -> bool:
        return ev.feasible and ev.reserve >= floor - _EPS

    def escalate(kind, levels, lo, hi, floor) -> float:
        """Smallest level in lo, lo+step, ..., hi meeting ``floor``, else hi."""
        trial = dict(levels)
        trial[kind] = lo
        ev = evaluate(trial, 0.0)
        if ok(ev, floor) or hi <= lo + _EPS:
            return lo
        k = max(1, math.ceil((floor - ev.reserve) / step - _EPS))
        while True:
            level = min(lo + k * step, hi)
            trial[kind] = level
            if ok(evaluate(trial, 0.0), floor) or level >= hi - _EPS:
                return level
            k += 1

    states = dict(state.resource_states)
    for kind in MechanismKind:
        states.setdefault(kind, ActivationState(now=state.hour - 1))
    carried_shed = state.shed_total
    levels = {k: 0.0 for k in MechanismKind}
    windows: dict[MechanismKind, tuple[float, float]] = {}
    prev_level: dict[MechanismKind, float] = {}
    caps_mw: dict[MechanismKind, float] = {}

    # Ramp windows for the deterministic mechanisms.
    r_int = res_map.get(MechanismKind.INTERRUPTIBLE)
    if r_int is not None:
        cap_i = r_int.capacity(committed_mw=hour_input.committed_mw)
        st = states[MechanismKind.INTERRUPTIBLE]
        lo, hi = ramp_window(r_int, st, 1.0, cap_i)
        hi = min(hi, float(business.sum()))
        windows[MechanismKind.INTERRUPTIBLE] = (min(lo, hi), hi)
        prev_level[MechanismKind.INTERRUPTIBLE] = st.active_mw
        caps_mw[MechanismKind.INTERRUPTIBLE] = cap_i
    r_rat = res_map.get(MechanismKind.RATIONING)
    if r_rat is not None:
        cap_r = r_rat.capacity(residential_mw=res_total)
        # Carry the active percentage, re-expressed on this hour's residential load.
        st = replace(states[MechanismKind.RATIONING], active_mw=state.rationing_frac * res_total)
        states[MechanismKind.RATIONING] = st
        windows[MechanismKind.RATIONING] = ramp_window(r_rat, st, 1.0, cap_r)
        prev_level[MechanismKind.RATIONING] = st.active_mw
        caps_mw[MechanismKind.RATIONING] = cap_r
    for kind, (lo, _) in windows.items():
        levels[kind] = lo

    # Incentive offer for this hour, discounted by reductions already in force.
    r_inc = res_map.get(MechanismKind.INCENTIVE)
    inc_offer = 0.0
    if r_inc is not None:
        total0 = float(load0.sum())
        shed_frac = min(1.0, carried_shed / total0) if total0 > 0 else 0.0
        already = min(1.0, state.rationing_frac + (1.0 - state.rationing_frac) * shed_frac)
        inc_offer = sample_incentive_capacity(r_inc.p_max, res_total, already, hour_rng(cfg.seed, hour_input.hour))

    signaled = False
    for kind in cfg.mechanism_order:
        if kind not in res_map:
            continue
        if kind is MechanismKind.INTERRUPTIBLE:
            ev = evaluate(levels, 0.0)
            ongoing = carried_shed > 0 or state.rationing_frac > 0 or levels[MechanismKind.RATIONING] > 0
            if not ev.feasible or interruptible_trigger(ev.reserve, ongoing, cfg.interrupt_threshold):
                lo, hi = windows[kind]
                levels[kind] = escalate(kind, levels, lo, hi, max(cfg.interrupt_threshold, p_r_min))
        elif kind is MechanismKind.RATIONING:
            if not ok(evaluate(levels, 0.0)):
                lo, hi = windows[kind]
                levels[kind] = escalate(kind, levels, lo, hi, p_r_min)
        else:
            # Signal only if the reductions inherited from the last hour fall short.
            if not ok(evaluate(levels, carried_shed)):
                signaled = True
                room = max(0.0, res_total - levels[MechanismKind.RATIONING])
                hi = min(inc_offer, room)
                levels[kind] = escalate(kind, levels, 0.0, hi, p_r_min)

    # Forced shedding: escalate from, or restore toward zero from, the carried amount.
    base = evaluate(levels, 0.0)
    max_shed = float(base.served.sum())
    k_floor = max(0, math.ceil((p_r_min - base.reserve) / step - _EPS))
    iter_cap = cfg.iteration_cap(float(load0.sum()))
    carried_eval = evaluate(levels, min(carried_shed, max_shed))
    iterations = 0
    if not ok(carried_eval):
        k = max(k_floor, math.ceil(carried_shed / step - _EPS))
        while True:
            shed_total = min(k * step, max_shed)
            chosen = evaluate(levels, shed_total)
            if ok(chosen):
                break
            iterations += 1
            if iterations >= iter_cap or shed_total >= max_shed - _EPS:
                raise NonConvergence(
                    f"hour {hour_input.hour}: no feasible shedding level with reserve >= {p_r_min} MW "
                    f"after {iterations} iterations (shed {shed_total:.3f} MW)"
                )
            k += 1
    elif carried_shed > 0 and carried_eval.reserve > p_r_min:
        # Restoration: monotone in the shed amount, so the first feasible
        # grid point above the reserve bound is where step-wise removal stops.
        chosen = carried_eval
        for k in range(k_floor, math.ceil(carried_shed / step - _EPS)):
            iterations += 1
            cand = evaluate(levels, min(k * step, max_shed))
            if ok(cand):
                chosen = cand
                break
            if iterations >= iter_cap:
                break
    else:
        chosen = carried_eval

    # Commit the chosen levels through the resource model.
    new_states = dict(states)
    for kind in (MechanismKind.INTERRUPTIBLE, MechanismKind.RATIONING):
        r = res_map.get(kind)
        if r is None:
            continue
        st = step_activation(r, states[kind], levels[kind] - prev_level[kind], 1.0, caps_mw[kind])
        if abs(st.active_mw - levels[kind]) > 1e-6:
            raise AssertionError(f"{kind.value}: committed {st.active_mw} != planned {levels[kind]}")
        new_states[kind] = st
    incentive_cap = state.incentive_cap
    if r_inc is not None:
        st = states[MechanismKind.INCENTIVE]
        if signaled:
            fresh = ActivationState(now=st.now)
            st = step_activation(r_inc, fresh, levels[MechanismKind.INCENTIVE], 1.0, inc_offer, resignal=True)
            incentive_cap = inc_offer
        else:
            st = step_activation(r_inc, st, -st.active_mw, 1.0, max(incentive_cap, st.active_mw))
            levels[MechanismKind.INCENTIVE] = st.active_mw
            if st.active_mw > 0:
                chosen = evaluate(levels, chosen.shed.sum())
        new_states[MechanismKind.INCENTIVE] = st

    dr = {k: chosen.dr[k] for k in res_map}
    result = HourResult(
        hour=hour_input.hour,
        counterfactual=load0,
        served=chosen.served,
        forced_shed=chosen.shed,
        dr=dr,
        reserve=chosen.reserve,
        feasible=chosen.feasible,
        dispatch=chosen.result,
        incentive_signaled=signaled,
        dcopf_calls=n_calls[0],
    )
    next_state = SimulationState(
        hour=hour_input.hour + 1,
        shed=chosen.shed.copy(),
        resource_states=new_states,
        rationing_frac=(levels[MechanismKind.RATIONING] / res_total) if res_total > 0 else state.rationing_frac,
        incentive_cap=incentive_cap,
    )
    return result, next_state


def run_simulation(case: GridCase, timeline: ScenarioTimeline, resources, cfg: EngineConfig,
                   solver=None) -> SimulationReport:
    """Fold :func:`run_hour` over the timeline and attach summary metrics."""
    timeline.check_against(case)
    if solver is None:
        solver = CachedSolver()
    committed = timeline.commitment()
    hours = timeline.hours
    state = SimulationState.initial(case, int(hours[0]))
    results = []
    for t, h in enumerate(hours):
        # Hour indices may skip; the state follows the input.
        state.hour = int(h)
        inp = HourInput(int(h), timeline.load[t], timeline.gen_cap[t], float(committed[t]))
        res, state = run_hour(case, inp, state, resources, cfg, solver=solver)
        results.append(res)
    report = SimulationReport(hours=results, ens=ens(results))
    if timeline.reference_shed is not None:
        total = report.forced_shed_series() + report.mechanism_series(MechanismKind.INTERRUPTIBLE)
        try:
            report.correlation_vs_reference = pearson(total, timeline.reference_shed)
        except DegenerateSeries:
            report.correlation_vs_reference = None
    return report
