"""Scenario configuration files.

Format: UTF-8 text, one ``key = value`` per line. Blank lines and anything
after ``#`` are ignored. Keys are case-sensitive and may appear once. Relative
paths resolve against the directory holding the config file.

Data keys (paths)::

    buses, branches, generators, loads   grid case CSVs (required)
    timeline, capacity                   hourly inputs (required)
    interruptible_commitment             committed interruptible MW per hour
    reference_shed                       observed total shedding per hour
    profiles                             sector profile CSV for profile-estimate
    out_dir                              output directory (default: out)

Engine keys::

    p_r_min_mw (>= 0, default 2300)   shed_step_mw (> 0, default 25)
    interrupt_threshold_mw (> 0, default 3000)
    mechanism_order (comma list, default interruptible,rationing,incentive)
    max_iterations_per_hour (>= 1)    seed (unsigned 64-bit, default 0)

Portfolio keys::

    interruptible_scale (>= 0, default 0)   rationing_max_frac ([0, 1], default 0)
    incentive_coverage ([0, 1], default 0)  replications (>= 1; default 30 with
    incentive coverage, otherwise 1)
    incentive_active_share, incentive_active_mean, incentive_active_sd,
    incentive_inactive_mean, incentive_inactive_sd, incentive_discount_rule
    kde_bandwidth_mw (> 0; default Silverman's rule)

Sweep and frontier keys::

    sweep_mechanism, sweep_scales (comma list, strictly increasing)
    frontier_rationing (comma list), frontier_incentive_coverage,
    frontier_tolerance (default 0.01), frontier_lower_scale (default 1),
    frontier_upper_scale (default 50)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from gridflex.constants import (
    DEFAULT_INTERRUPT_THRESHOLD_MW,
    DEFAULT_P_R_MIN_MW,
    DEFAULT_SHED_STEP_MW,
)
from gridflex.errors import ConfigError, GridFlexError
from gridflex.flex import IncentiveModel, MechanismKind

PATH_KEYS = ("buses", "branches", "generators", "loads", "timeline", "capacity",
             "interruptible_commitment", "reference_shed", "profiles")
REQUIRED_PATHS = ("buses", "branches", "generators", "loads", "timeline", "capacity")
DEFAULT_ORDER_TEXT = "interruptible,rationing,incentive"
U64_MAX = 2**64 - 1

_FLOAT_KEYS = {
    # key: (default, lower, lower_inclusive, upper)
    "p_r_min_mw": (DEFAULT_P_R_MIN_MW, 0.0, True, math.inf),
    "shed_step_mw": (DEFAULT_SHED_STEP_MW, 0.0, False, math.inf),
    "interrupt_threshold_mw": (DEFAULT_INTERRUPT_THRESHOLD_MW, 0.0, False, math.inf),
    "interruptible_scale": (0.0, 0.0, True, math.inf),
    "rationing_max_frac": (0.0, 0.0, True, 1.0),
    "incentive_coverage": (0.0, 0.0, True, 1.0),
    "incentive_active_share": (IncentiveModel.active_share, 0.0, True, 1.0),
    "incentive_active_mean": (IncentiveModel.active_mean, 0.0, True, 1.0),
    "incentive_active_sd": (IncentiveModel.active_sd, 0.0, True, math.inf),
    "incentive_inactive_mean": (IncentiveModel.inactive_mean, 0.0, True, 1.0),
    "incentive_inactive_sd": (IncentiveModel.inactive_sd, 0.0, True, math.inf),
    "kde_bandwidth_mw": (None, 0.0, False, math.inf),
    "frontier_incentive_coverage": (0.0, 0.0, True, 1.0),
    "frontier_tolerance": (0.01, 0.0, False, math.inf),
    "frontier_lower_scale": (1.0, 0.0, True, math.inf),
    "frontier_upper_scale": (50.0, 0.0, False, math.inf),
}
_INT_KEYS = {"seed": (0, 0), "max_iterations_per_hour": (None, 1), "replications": (None, 1)}
_TEXT_KEYS = {"mechanism_order", "incentive_discount_rule", "sweep_mechanism", "sweep_scales",
              "frontier_rationing", "out_dir"}
KNOWN_KEYS = set(PATH_KEYS) | set(_FLOAT_KEYS) | set(_INT_KEYS) | _TEXT_KEYS


@dataclass(frozen=True)
class ScenarioConfig:
    source: Path | None
    paths: dict[str, Path]
    out_dir: Path
    p_r_min_mw: float = DEFAULT_P_R_MIN_MW
    shed_step_mw: float = DEFAULT_SHED_STEP_MW
    interrupt_threshold_mw: float = DEFAULT_INTERRUPT_THRESHOLD_MW
    mechanism_order: tuple[MechanismKind, ...] = tuple(MechanismKind.parse(k) for k in DEFAULT_ORDER_TEXT.split(","))
    max_iterations_per_hour: int | None = None
    seed: int = 0
    interruptible_scale: float = 0.0
    rationing_max_frac: float = 0.0
    incentive_coverage: float = 0.0
    replications: int | None = None
    incentive_model: IncentiveModel = field(default_factory=IncentiveModel)
    kde_bandwidth_mw: float | None = None
    sweep_mechanism: MechanismKind | None = None
    sweep_scales: tuple[float, ...] = ()
    frontier_rationing: tuple[float, ...] = ()
    frontier_incentive_coverage: float = 0.0
    frontier_tolerance: float = 0.01
    frontier_lower_scale: float = 1.0
    frontier_upper_scale: float = 50.0

    def path(self, key: str) -> Path | None:
        return self.paths.get(key)

    @property
    def effective_replications(self) -> int:
        if self.replications is not None:
            return self.replications
        return 30 if self.incentive_coverage > 0 else 1

    def with_overrides(self, out_dir=None, seed=None) -> ScenarioConfig:
        cfg = self
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        if seed is not None:
            if not (0 <= int(seed) <= U64_MAX):
                raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {seed}")
            cfg = replace(cfg, seed=int(seed))
        return cfg


def parse_pairs(text: str, source: str = "<config>") -> dict[str, tuple[int, str]]:
    """Split config text into ``{key: (line, raw value)}``."""
    out: dict[str, tuple[int, str]] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{n}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r} (first set on line {out[key][0]})")
        out[key] = (n, value)
    return out


def _float_list(key, value, errors):
    try:
        vals = tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        errors.append(f"{key}: expected a comma-separated list of numbers, got {value!r}")
        return ()
    if not all(math.isfinite(v) for v in vals):
        errors.append(f"{key}: values must be finite")
    return vals


def config_from_pairs(pairs: dict[str, tuple[int, str]], base_dir: Path, source: Path | None = None
                      ) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig`, collecting every problem before raising."""
    errors: list[str] = []
    for key in pairs:
        if key not in KNOWN_KEYS:
            errors.append(f"{key}: unknown key (line {pairs[key][0]})")

    def raw(key):
        return pairs[key][1] if key in pairs else None

    kw: dict = {}
    for key, (default, lo, lo_inc, hi) in _FLOAT_KEYS.items():
        text = raw(key)
        if text is None:
            kw[key] = default
            continue
        try:
            v = float(text)
        except ValueError:
            errors.append(f"{key}: expected a number, got {text!r}")
            continue
        ok_lo = v >= lo if lo_inc else v > lo
        if not (math.isfinite(v) and ok_lo and v <= hi):
            bound = (">= " if lo_inc else "> ") + f"{lo:g}" + ("" if hi == math.inf else f" and <= {hi:g}")
            errors.append(f"{key}: must be {bound}, got {text}")
            continue
        kw[key] = v
    for key, (default, lo) in _INT_KEYS.items():
        text = raw(key)
        if text is None:
            kw[key] = default
            continue
        try:
            v = int(text)
        except ValueError:
            errors.append(f"{key}: expected an integer, got {text!r}")
            continue
        if v < lo or (key == "seed" and v > U64_MAX):
            errors.append(f"{key}: out of range, got {text}")
            continue
        kw[key] = v

    order = raw("mechanism_order") or DEFAULT_ORDER_TEXT
    try:
        kinds = tuple(MechanismKind.parse(k) for k in order.split(","))
        if sorted(k.value for k in kinds) != sorted(k.value for k in MechanismKind):
            raise ValueError("must list each mechanism exactly once")
        kw["mechanism_order"] = kinds
    except ValueError as exc:
        errors.append(f"mechanism_order: {exc}")

    if raw("sweep_mechanism") is not None:
        try:
            kw["sweep_mechanism"] = MechanismKind.parse(raw("sweep_mechanism"))
        except ValueError as exc:
            errors.append(f"sweep_mechanism: {exc}")
    if raw("sweep_scales") is not None:
        scales = _float_list("sweep_scales", raw("sweep_scales"), errors)
        if any(b <= a for a, b in zip(scales, scales[1:])):
            errors.append("sweep_scales: must be strictly increasing")
        if any(s < 0 for s in scales):
            errors.append("sweep_scales: must be >= 0")
        kw["sweep_scales"] = scales
    if raw("frontier_rationing") is not None:
        levels = _float_list("frontier_rationing", raw("frontier_rationing"), errors)
        if any(not 0 <= v <= 1 for v in levels):
            errors.append("frontier_rationing: levels must lie in [0, 1]")
        kw["frontier_rationing"] = levels
    if ("frontier_lower_scale" in kw and "frontier_upper_scale" in kw
            and kw["frontier_lower_scale"] >= kw["frontier_upper_scale"]):
        errors.append("frontier_upper_scale: must exceed frontier_lower_scale")

    rule = raw("incentive_discount_rule") or "linear"
    try:
        kw["incentive_model"] = IncentiveModel(
            coverage=kw.get("incentive_coverage", 0.0) or 0.0,
            active_share=kw.get("incentive_active_share", IncentiveModel.active_share),
            active_mean=kw.get("incentive_active_mean", IncentiveModel.active_mean),
            active_sd=kw.get("incentive_active_sd", IncentiveModel.active_sd),
            inactive_mean=kw.get("incentive_inactive_mean", IncentiveModel.inactive_mean),
            inactive_sd=kw.get("incentive_inactive_sd", IncentiveModel.inactive_sd),
            discount_rule=rule,
        )
    except GridFlexError as exc:
        errors.append(f"incentive_discount_rule: {exc}" if "rule" in str(exc) else f"incentive model: {exc}")
    for key in ("incentive_active_share", "incentive_active_mean", "incentive_active_sd",
                "incentive_inactive_mean", "incentive_inactive_sd"):
        kw.pop(key, None)

    paths = {}
    for key in PATH_KEYS:
        text = raw(key)
        if text is None:
            if key in REQUIRED_PATHS:
                errors.append(f"{key}: required path is missing")
            continue
        p = Path(text)
        paths[key] = p if p.is_absolute() else base_dir / p
    out_text = raw("out_dir") or "out"
    out_dir = Path(out_text) if Path(out_text).is_absolute() else base_dir / out_text

    if errors:
        raise ConfigError(f"{source or '<config>'}: {len(errors)} problem(s)", errors)
    return ScenarioConfig(source=source, paths=paths, out_dir=out_dir, **kw)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found", [f"{path}: config file not found"]) from None
    return config_from_pairs(parse_pairs(text, str(path)), path.parent, source=path)


def missing_files(cfg: ScenarioConfig) -> list[str]:
    return [f"{key}: file not found: {p}" for key, p in cfg.paths.items() if not p.is_file()]


FIXTURE_DIR = Path(__file__).resolve().parent / "data" / "fixture9"


def fixture_config(name: str = "scenario") -> Path:
    """Path of a config shipped with the bundled 9-bus fixture."""
    path = FIXTURE_DIR / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return path


def engine_config(cfg: ScenarioConfig):
    from gridflex.engine import EngineConfig

    return EngineConfig(
        p_r_min=cfg.p_r_min_mw,
        shed_step=cfg.shed_step_mw,
        interrupt_threshold=cfg.interrupt_threshold_mw,
        mechanism_order=cfg.mechanism_order,
        max_iterations_per_hour=cfg.max_iterations_per_hour,
        seed=cfg.seed,
    )


def portfolio_settings(cfg: ScenarioConfig):
    from gridflex.portfolio import PortfolioSettings

    return PortfolioSettings(cfg.interruptible_scale, cfg.rationing_max_frac, cfg.incentive_coverage)


def build_scenario(cfg: ScenarioConfig):
    """Load and validate every input the config names."""
    from gridflex.grid import check_case, load_grid_case
    from gridflex.portfolio import Scenario
    from gridflex.timeline import load_timeline

    missing = missing_files(cfg)
    if missing:
        raise ConfigError(f"{cfg.source or '<config>'}: missing input files", missing)
    p = cfg.paths
    case = check_case(load_grid_case(p["buses"], p["branches"], p["generators"], p["loads"]))
    timeline = load_timeline(case, p["timeline"], p["capacity"], p.get("interruptible_commitment"),
                             p.get("reference_shed"))
    return Scenario(case=case, timeline=timeline, engine=engine_config(cfg),
                    incentive_model=replace(cfg.incentive_model, coverage=0.0))
