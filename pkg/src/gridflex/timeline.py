"""Hourly scenario inputs: counterfactual load, available capacity, commitments.

Long-format CSVs::

    timeline.csv                  hour_index,bus,counterfactual_load_mw
    capacity.csv                  hour_index,generator_id,available_mw
    interruptible_commitment.csv  hour_index,committed_mw
    reference_shed.csv            hour_index,total_shed_mw
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from gridflex.errors import ValidationError
from gridflex.grid import GridCase, parse_float, parse_int, read_rows


@dataclass(frozen=True)
class ScenarioTimeline:
    hours: np.ndarray  # (T,) hour indices, strictly increasing
    load: np.ndarray  # (T, n_load) MW, columns in case.load_buses order
    gen_cap: np.ndarray  # (T, n_gen) MW, columns in case.generators order
    committed_mw: np.ndarray | None = None  # (T,) interruptible commitment
    reference_shed: np.ndarray | None = None  # (T,) observed total shedding

    def __post_init__(self):
        hours = np.asarray(self.hours, dtype=int)
        load = np.asarray(self.load, dtype=float)
        cap = np.asarray(self.gen_cap, dtype=float)
        object.__setattr__(self, "hours", hours)
        object.__setattr__(self, "load", load)
        object.__setattr__(self, "gen_cap", cap)
        n = len(hours)
        if n < 1:
            raise ValidationError("timeline needs at least one hour")
        if load.ndim != 2 or load.shape[0] != n or cap.ndim != 2 or cap.shape[0] != n:
            raise ValidationError("load and capacity series must have one row per hour")
        if np.any(np.diff(hours) <= 0):
            raise ValidationError("hour indices must be strictly increasing")
        for name in ("committed_mw", "reference_shed"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (n,):
                    raise ValidationError(f"{name} must have one value per hour")
                object.__setattr__(self, name, v)
        if np.any(load < 0) or np.any(cap < 0):
            raise ValidationError("loads and capacities must be >= 0")
        if self.committed_mw is not None and np.any(self.committed_mw < 0):
            raise ValidationError("committed interruptible MW must be >= 0")

    @property
    def n_hours(self) -> int:
        return len(self.hours)

    def commitment(self) -> np.ndarray:
        return self.committed_mw if self.committed_mw is not None else np.zeros(self.n_hours)

    def with_capacity(self, gen_cap) -> ScenarioTimeline:
        return replace(self, gen_cap=np.asarray(gen_cap, dtype=float))

    def check_against(self, case: GridCase) -> ScenarioTimeline:
        if self.load.shape[1] != len(case.load_buses):
            raise ValidationError(f"timeline has {self.load.shape[1]} load columns, case has {len(case.load_buses)}")
        if self.gen_cap.shape[1] != len(case.generators):
            raise ValidationError(f"timeline has {self.gen_cap.shape[1]} capacity columns, case has {len(case.generators)}")
        over = self.gen_cap > case.gen_capacity[None, :] + 1e-9
        if over.any():
            t, g = np.argwhere(over)[0]
            raise ValidationError(
                f"hour {self.hours[t]}: generator {case.generators[g].id} available "
                f"{self.gen_cap[t, g]} MW exceeds installed {case.gen_capacity[g]} MW"
            )
        return self


def _pivot(path, rows, hours, keys, label):
    """Arrange {(hour, key): value} into a dense (T, K) array, requiring every cell."""
    h_index = {h: i for i, h in enumerate(hours)}
    k_index = {k: j for j, k in enumerate(keys)}
    out = np.full((len(hours), len(keys)), np.nan)
    for (h, k), v in rows.items():
        if k not in k_index:
            raise ValidationError(f"{path}: unknown {label} {k}")
        if h not in h_index:
            raise ValidationError(f"{path}: hour {h} not present in timeline")
        out[h_index[h], k_index[k]] = v
    if np.isnan(out).any():
        t, j = np.argwhere(np.isnan(out))[0]
        raise ValidationError(f"{path}: missing value for hour {hours[t]}, {label} {keys[j]}")
    return out


def _read_long(path, cols):
    rows = {}
    for line, row in read_rows(path, cols):
        key = (parse_int(path, line, row, cols[0]), parse_int(path, line, row, cols[1]))
        if key in rows:
            raise ValidationError(f"{path}:{line}: duplicate entry for hour {key[0]}, {cols[1]} {key[1]}")
        rows[key] = parse_float(path, line, row, cols[2])
    return rows


def _read_series(path, value_col):
    out = {}
    for line, row in read_rows(path, ("hour_index", value_col)):
        out[parse_int(path, line, row, "hour_index")] = parse_float(path, line, row, value_col)
    return out


def load_timeline(case: GridCase, timeline_path, capacity_path, commitment_path=None,
                  reference_path=None) -> ScenarioTimeline:
    loads = _read_long(timeline_path, ("hour_index", "bus", "counterfactual_load_mw"))
    caps = _read_long(capacity_path, ("hour_index", "generator_id", "available_mw"))
    hours = sorted({h for h, _ in loads})
    load = _pivot(timeline_path, loads, hours, [lb.bus for lb in case.load_buses], "bus")
    cap = _pivot(capacity_path, caps, hours, [g.id for g in case.generators], "generator")

    def series(path, col):
        if path is None:
            return None
        values = _read_series(path, col)
        missing = [h for h in hours if h not in values]
        if missing:
            raise ValidationError(f"{path}: missing hour {missing[0]}")
        return np.array([values[h] for h in hours])

    tl = ScenarioTimeline(
        np.array(hours), load, cap,
        committed_mw=series(commitment_path, "committed_mw"),
        reference_shed=series(reference_path, "total_shed_mw"),
    )
    return tl.check_against(case)


def write_timeline(directory, case: GridCase, tl: ScenarioTimeline) -> dict[str, Path]:
    """Inverse of :func:`load_timeline` (used to generate fixtures and variants)."""
    import csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {"timeline": directory / "timeline.csv", "capacity": directory / "capacity.csv"}
    with open(paths["timeline"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour_index", "bus", "counterfactual_load_mw"])
        for t, h in enumerate(tl.hours):
            for j, lb in enumerate(case.load_buses):
                w.writerow([int(h), lb.bus, _fmt(tl.load[t, j])])
    with open(paths["capacity"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour_index", "generator_id", "available_mw"])
        for t, h in enumerate(tl.hours):
            for j, g in enumerate(case.generators):
                w.writerow([int(h), g.id, _fmt(tl.gen_cap[t, j])])
    for key, col, values in (
        ("interruptible_commitment", "committed_mw", tl.committed_mw),
        ("reference_shed", "total_shed_mw", tl.reference_shed),
    ):
        if values is None:
            continue
        paths[key] = directory / f"{key}.csv"
        with open(paths[key], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hour_index", col])
            for h, v in zip(tl.hours, values):
                w.writerow([int(h), _fmt(v)])
    return paths


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)
