"""Demand-flexibility resources.

Every mechanism is an instance of one ramp/capacity/duration model::

    r_min <= R_t <= r_max          (ramp, fraction of capacity per hour)
    dP/dt = R_t                    (forward difference, hourly blocks)
    0 <= P_t <= P_max
    t_min <= T <= t_max            (activation duration, hours)

The three mechanisms differ only in parameters and in how ``P_max`` is
realised each hour: a multiple of committed interruptible MW, a fraction of
residential MW, or a random draw for incentive-based response.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from gridflex.constants import DEFAULT_INTERRUPT_THRESHOLD_MW
from gridflex.errors import InvalidState, ModelError


class MechanismKind(str, enum.Enum):
    INTERRUPTIBLE = "interruptible"
    RATIONING = "rationing"
    INCENTIVE = "incentive"

    @classmethod
    def parse(cls, text: str) -> MechanismKind:
        key = text.strip().lower()
        aliases = {
            "interruptibleload": cls.INTERRUPTIBLE,
            "loadrationing": cls.RATIONING,
            "incentivedr": cls.INCENTIVE,
        }
        try:
            return cls(key)
        except ValueError:
            if key in aliases:
                return aliases[key]
            raise ValueError(f"unknown mechanism {text!r}") from None


DETERMINISTIC = (MechanismKind.INTERRUPTIBLE, MechanismKind.RATIONING)


@dataclass(frozen=True)
class IncentiveModel:
    """Two-group participant response.

    Numeric defaults are placeholders; the field data behind the real
    distribution is not public.
    """

    coverage: float = 0.0  # share of residential customers enrolled
    active_share: float = 0.5
    active_mean: float = 0.2  # per-customer reduction fraction
    active_sd: float = 0.05
    inactive_mean: float = 0.02
    inactive_sd: float = 0.01
    discount_rule: str = "linear"  # "linear": x (1 - already_reduced); "none"

    def __post_init__(self):
        for name in ("coverage", "active_share", "active_mean", "inactive_mean"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ModelError(f"{name} must lie in [0, 1], got {v}")
        for name in ("active_sd", "inactive_sd"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ModelError(f"{name} must be >= 0, got {v}")
        if self.discount_rule not in ("linear", "none"):
            raise ModelError(f"unknown discount rule {self.discount_rule!r}")

    def discount(self, existing_reduction_frac: float) -> float:
        if self.discount_rule == "none":
            return 1.0
        return 1.0 - existing_reduction_frac


@dataclass(frozen=True)
class FlexResource:
    kind: MechanismKind
    r_min: float  # <= 0, fraction of realised capacity per hour
    r_max: float  # >= 0
    p_max: float | IncentiveModel  # fraction of the kind's base MW, or sampling model
    t_min: float = 0.0
    t_max: float = math.inf
    # interruptible: multiplier on committed MW; rationing/incentive: coverage fraction
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MechanismKind(self.kind))
        if not (self.r_min <= 0.0 <= self.r_max):
            raise ValueError(f"need r_min <= 0 <= r_max, got ({self.r_min}, {self.r_max})")
        if not (0.0 <= self.t_min <= self.t_max):
            raise ValueError(f"need 0 <= t_min <= t_max, got ({self.t_min}, {self.t_max})")
        if self.kind is MechanismKind.INCENTIVE:
            if not isinstance(self.p_max, IncentiveModel):
                raise ValueError("incentive resources take an IncentiveModel as p_max")
            object.__setattr__(self, "scale", self.p_max.coverage)
        elif not (isinstance(self.p_max, (int, float)) and self.p_max >= 0):
            raise ValueError(f"p_max must be a non-negative number, got {self.p_max!r}")
        if not self.scale >= 0:
            raise ValueError(f"scale must be >= 0, got {self.scale}")
        if self.kind is not MechanismKind.INTERRUPTIBLE and self.scale > 1:
            raise ValueError(f"{self.kind.value} scale is a coverage fraction, got {self.scale}")

    @property
    def deterministic(self) -> bool:
        return self.kind in DETERMINISTIC

    def with_scale(self, scale: float) -> FlexResource:
        if self.kind is MechanismKind.INCENTIVE:
            return replace(self, p_max=replace(self.p_max, coverage=scale))
        return replace(self, scale=scale)

    def with_p_max(self, p_max: float) -> FlexResource:
        return replace(self, p_max=p_max)

    def capacity(self, committed_mw: float = 0.0, residential_mw: float = 0.0) -> float:
        """Realised MW capacity of a deterministic resource this hour."""
        if self.kind is MechanismKind.INTERRUPTIBLE:
            return self.scale * self.p_max * committed_mw
        if self.kind is MechanismKind.RATIONING:
            return self.scale * self.p_max * residential_mw
        raise ValueError("incentive capacity is sampled; use sample_incentive_capacity")


def default_resource(kind, scale: float | None = None) -> FlexResource:
    """Reference parameterisation of each mechanism."""
    kind = MechanismKind(kind)
    if kind is MechanismKind.INTERRUPTIBLE:
        res = FlexResource(kind, r_min=-1.0, r_max=0.5, p_max=1.0, t_max=math.inf)
    elif kind is MechanismKind.RATIONING:
        res = FlexResource(kind, r_min=-0.1, r_max=0.1, p_max=0.5, t_max=math.inf)
    else:
        res = FlexResource(kind, r_min=-1.0, r_max=1.0, p_max=IncentiveModel(), t_max=1.0)
    return res if scale is None else res.with_scale(scale)


@dataclass(frozen=True)
class ActivationState:
    active_mw: float = 0.0
    active_since: float | None = None  # start of the current activation
    last_rate: float = 0.0  # MW/h actually applied in the last step
    now: float = 0.0  # time of the block this state describes

    def duration(self) -> float:
        """Hours covered by the current activation, counting the present block."""
        if self.active_since is None:
            return 0.0
        return self.now - self.active_since + 1.0


def ramp_window(res: FlexResource, state: ActivationState, dt: float, realized_cap: float) -> tuple[float, float]:
    """Lowest and highest level reachable in the next block of length ``dt``."""
    if state.active_mw < 0:
        raise InvalidState(f"negative active_mw {state.active_mw}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if realized_cap < 0:
        raise ValueError("realized_cap must be >= 0")
    old = state.active_mw
    release_rate = -res.r_min * realized_cap  # MW/h
    lo = old + res.r_min * realized_cap * dt
    hi = old + res.r_max * realized_cap * dt
    continuing = old > 0 and state.active_since is not None
    running = state.duration() + dt if continuing else dt
    if continuing and running > res.t_max + 1e-12:
        # Expired: release as fast as the restoration rate allows.
        hi = lo
    else:
        if continuing and running - dt < res.t_min - 1e-12:
            lo = max(lo, min(old, hi))
        if math.isfinite(res.t_max):
            # Never rise above what can still be released by t_max once any
            # minimum-duration hold has ended.
            hi = min(hi, max(lo, release_rate * (res.t_max - max(running, res.t_min) + dt)))
    lo = min(max(lo, 0.0), realized_cap)
    hi = min(max(hi, 0.0), realized_cap)
    return lo, max(lo, hi)


def step_activation(
    res: FlexResource,
    state: ActivationState,
    requested_delta: float,
    dt: float,
    realized_cap: float,
    resignal: bool = False,
) -> ActivationState:
    """Advance one block, granting as much of ``requested_delta`` as the limits allow.

    ``resignal`` starts a fresh activation episode, which lifts an expired
    ``t_max`` hold (used for hourly incentive signals).
    """
    if state.active_mw < 0:
        raise InvalidState(f"negative active_mw {state.active_mw}")
    if resignal:
        state = replace(state, active_since=None)
    lo, hi = ramp_window(res, state, dt, realized_cap)
    new = min(max(state.active_mw + requested_delta, lo), hi)
    now = state.now + dt
    if new <= 1e-9 * max(1.0, realized_cap):  # round-off left by a full release
        since = None
        new = 0.0
    elif state.active_since is None or state.active_mw <= 0.0:
        since = now
    else:
        since = state.active_since
    return ActivationState(active_mw=new, active_since=since, last_rate=(new - state.active_mw) / dt, now=now)


def interruptible_trigger(reserve: float, shedding_or_rationing_active: bool,
                          threshold: float = DEFAULT_INTERRUPT_THRESHOLD_MW) -> bool:
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return reserve < threshold or bool(shedding_or_rationing_active)


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float) -> float:
    """One draw from N(mean, sd) conditioned on [0, 1] (inverse-CDF method)."""
    u = rng.random()
    if sd == 0.0:
        return min(max(mean, 0.0), 1.0)
    lo, hi = ndtr((0.0 - mean) / sd), ndtr((1.0 - mean) / sd)
    if hi - lo < 1e-300:
        return min(max(mean, 0.0), 1.0)
    x = mean + sd * float(ndtri(lo + u * (hi - lo)))
    return min(max(x, 0.0), 1.0)


def sample_incentive_capacity(model: IncentiveModel, residential_mw: float,
                              existing_reduction_frac: float, rng: np.random.Generator) -> float:
    """Aggregate MW the enrolled customers offer in response to one signal.

    Always consumes exactly two uniforms from ``rng`` so that runs with
    different coverage stay on common random numbers.
    """
    if not residential_mw >= 0:
        raise ModelError(f"residential_mw must be >= 0, got {residential_mw}")
    if not (0.0 <= existing_reduction_frac <= 1.0):
        raise ModelError(f"existing_reduction_frac must lie in [0, 1], got {existing_reduction_frac}")
    active = _truncated_normal(rng, model.active_mean, model.active_sd)
    inactive = _truncated_normal(rng, model.inactive_mean, model.inactive_sd)
    covered = residential_mw * model.coverage
    per_customer = model.active_share * active + (1.0 - model.active_share) * inactive
    mw = covered * per_customer * model.discount(existing_reduction_frac)
    return min(max(mw, 0.0), covered)


def allocate_reduction(total_mw: float, sector_mw, weights=None) -> np.ndarray:
    """Split ``total_mw`` across buses, capped by each bus's sector MW.

    Shares are proportional to ``weights`` (default: the sector MW itself).
    Buses that hit their cap drop out and their overflow is re-spread over
    the rest until the total is placed or every bus is capped, so the result
    sums to ``min(total_mw, sum(sector_mw))``.
    """
    if total_mw < 0:
        raise ValueError("total_mw must be >= 0")
    cap = np.asarray(sector_mw, dtype=float)
    if np.any(cap < 0):
        raise ValueError("sector MW must be >= 0")
    w = cap.copy() if weights is None else np.asarray(weights, dtype=float)
    if w.shape != cap.shape or np.any(w < 0):
        raise ValueError("weights must be non-negative and match sector_mw")

    alloc = np.zeros_like(cap)
    remaining = min(float(total_mw), float(cap.sum()))
    open_ = cap > 0
    while remaining > 0 and open_.any():
        wo = np.where(open_, w, 0.0)
        if wo.sum() <= 0:
            wo = np.where(open_, cap - alloc, 0.0)
        share = remaining * wo / wo.sum()
        room = cap - alloc
        over = open_ & (share >= room)
        if not over.any():
            alloc += share
            break
        remaining -= float(room[over].sum())
        alloc[over] = cap[over]
        open_ &= ~over
    return alloc
