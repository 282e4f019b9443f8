"""Single-snapshot DC optimal power flow in angle (B-theta) form.

    min  sum_g c_g p_g
    s.t. Cg p - B theta * base = d          (nodal balance, MW)
         |(theta_f - theta_t) / x| * base <= limit
         0 <= p <= cap,   theta_slack = 0

Infeasibility is reported through ``DispatchResult.feasible``; it is the
convergence flag the shedding loop consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from gridflex.constants import FEAS_TOL_MW
from gridflex.errors import NumericalError, ValidationError
from gridflex.grid import GridCase

_HIGHS_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class SnapshotInput:
    case: GridCase
    gen_cap: np.ndarray  # MW, one entry per generator
    load: np.ndarray  # MW, one entry per load bus (case.load_buses order)

    def __post_init__(self):
        cap = np.asarray(self.gen_cap, dtype=float)
        load = np.asarray(self.load, dtype=float)
        object.__setattr__(self, "gen_cap", cap)
        object.__setattr__(self, "load", load)
        if cap.shape != (len(self.case.generators),):
            raise ValidationError(f"gen_cap has shape {cap.shape}, expected ({len(self.case.generators)},)")
        if load.shape != (len(self.case.load_buses),):
            raise ValidationError(f"load has shape {load.shape}, expected ({len(self.case.load_buses)},)")
        if not (np.all(np.isfinite(cap)) and np.all(np.isfinite(load))):
            raise NumericalError("non-finite capacity or load in snapshot")
        if np.any(cap < -FEAS_TOL_MW) or np.any(cap > self.case.gen_capacity + FEAS_TOL_MW):
            raise ValidationError("available capacity outside [0, installed capacity]")
        if np.any(load < -FEAS_TOL_MW):
            raise ValidationError("negative load in snapshot")


@dataclass
class DispatchResult:
    feasible: bool
    dispatch: np.ndarray = field(default_factory=lambda: np.zeros(0))  # MW per generator
    flows: np.ndarray = field(default_factory=lambda: np.zeros(0))  # MW per branch
    angles: np.ndarray = field(default_factory=lambda: np.zeros(0))  # rad per bus
    cost: float = float("nan")  # $/h


@dataclass(frozen=True)
class _Network:
    gen_incidence: sparse.csr_matrix  # (n_bus, n_gen)
    load_incidence: sparse.csr_matrix  # (n_bus, n_load)
    bbus: sparse.csr_matrix  # (n_bus, n_bus), per unit
    bf: sparse.csr_matrix  # (n_branch, n_bus), per unit flow from angles
    cost: np.ndarray
    limit_pu: np.ndarray
    gen_rank: np.ndarray
    tied_costs: bool
    a_eq: sparse.csr_matrix  # over x = [p_pu, theta]
    a_ub: sparse.csr_matrix
    b_ub: np.ndarray


def network_matrices(case: GridCase) -> _Network:
    """Susceptance and incidence matrices, built once per case."""
    cached = case.__dict__.get("_dc_network")
    if cached is not None:
        return cached
    idx = case.bus_index
    nb, ng, nl, nbr = case.n_bus, len(case.generators), len(case.load_buses), len(case.branches)
    gi = sparse.csr_matrix(
        (np.ones(ng), ([idx[g.bus] for g in case.generators], np.arange(ng))), shape=(nb, ng)
    )
    li = sparse.csr_matrix(
        (np.ones(nl), ([idx[lb.bus] for lb in case.load_buses], np.arange(nl))), shape=(nb, nl)
    )
    f = np.array([idx[br.from_bus] for br in case.branches], dtype=int)
    t = np.array([idx[br.to_bus] for br in case.branches], dtype=int)
    b = 1.0 / np.array([br.reactance for br in case.branches], dtype=float)
    rows = np.r_[np.arange(nbr), np.arange(nbr)]
    cf = sparse.csr_matrix((np.r_[np.ones(nbr), -np.ones(nbr)], (rows, np.r_[f, t])), shape=(nbr, nb))
    bf = sparse.diags(b) @ cf
    bbus = (cf.T @ bf).tocsr()
    cost = np.array([g.cost for g in case.generators], dtype=float)
    limit_pu = np.array([br.limit for br in case.branches], dtype=float) / case.base_mva
    bf = bf.tocsr()
    zeros = sparse.csr_matrix((nbr, ng))
    a_eq = sparse.hstack([gi, -bbus], format="csr")
    a_ub = sparse.vstack([sparse.hstack([zeros, bf]), sparse.hstack([zeros, -bf])], format="csr")
    order = np.argsort([g.id for g in case.generators], kind="stable")
    rank = np.empty(ng)
    rank[order] = np.arange(1, ng + 1)
    net = _Network(
        gen_incidence=gi,
        load_incidence=li,
        bbus=bbus,
        bf=bf,
        cost=cost,
        limit_pu=limit_pu,
        gen_rank=rank,
        tied_costs=len(np.unique(cost)) < ng,
        a_eq=a_eq,
        a_ub=a_ub,
        b_ub=np.r_[limit_pu, limit_pu],
    )
    case.__dict__["_dc_network"] = net
    return net


def solve_dcopf(snapshot: SnapshotInput) -> DispatchResult:
    """Least-cost dispatch of one hourly snapshot, or ``feasible=False``."""
    case = snapshot.case
    net = network_matrices(case)
    base = case.base_mva
    ng, nb = len(case.generators), case.n_bus
    demand_pu = net.load_incidence @ snapshot.load / base

    a_eq, a_ub, b_ub = net.a_eq, net.a_ub, net.b_ub
    cap_pu = np.clip(snapshot.gen_cap, 0.0, None) / base
    bounds = [(0.0, c) for c in cap_pu] + [(None, None)] * nb
    bounds[ng + case.slack_index] = (0.0, 0.0)
    c = np.r_[net.cost * base, np.zeros(nb)]

    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=demand_pu, bounds=bounds,
                  method="highs", options=_HIGHS_OPTIONS)
    if res.status == 2:
        return DispatchResult(feasible=False)
    if res.status != 0:
        raise NumericalError(f"LP backend failed: {res.message}")
    x = res.x

    if net.tied_costs:
        # Among cost-optimal dispatches prefer lower generator ids.
        budget = res.fun + max(abs(res.fun), 1.0) * 1e-9
        tie = linprog(np.r_[net.gen_rank, np.zeros(nb)],
                      A_ub=sparse.vstack([a_ub, sparse.csr_matrix(c)], format="csr"),
                      b_ub=np.r_[b_ub, budget], A_eq=a_eq, b_eq=demand_pu, bounds=bounds,
                      method="highs", options=_HIGHS_OPTIONS)
        if tie.status == 0:
            x = tie.x

    dispatch = x[:ng] * base
    angles = x[ng:]
    flows = net.bf @ angles * base
    return DispatchResult(
        feasible=True,
        dispatch=dispatch,
        flows=flows,
        angles=angles,
        cost=float(net.cost @ dispatch),
    )


def balance_residual(snapshot: SnapshotInput, result: DispatchResult) -> np.ndarray:
    """Nodal balance mismatch (MW) of a feasible result."""
    net = network_matrices(snapshot.case)
    base = snapshot.case.base_mva
    injection = net.gen_incidence @ result.dispatch - net.load_incidence @ snapshot.load
    return injection - net.bbus @ result.angles * base


def total_reserve(snapshot: SnapshotInput, restored_shed: float = 0.0) -> float:
    """Available capacity minus load, plus shed already taken off that load (MW)."""
    if restored_shed < 0:
        raise ValueError("restored_shed must be >= 0")
    return float(np.sum(snapshot.gen_cap) - np.sum(snapshot.load) + restored_shed)
