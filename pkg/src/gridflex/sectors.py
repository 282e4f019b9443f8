"""Recover per-sector peak capacities from normalised load profiles.

Each hour ``i`` gives sector fractions ``(R_i, B_i, O_i)`` of unknown sector
peaks and the observed zone total ``P_i``; the peaks solve

    R_i r_max + B_i b_max + O_i o_max = P_i     for all i

in the non-negative least-squares sense. One profile file per weather zone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gridflex.errors import ValidationError
from gridflex.grid import parse_float, parse_int, read_rows
from gridflex.nnls import nnls


@dataclass(frozen=True)
class SectorProfileMatrix:
    hours: np.ndarray  # hour indices, shape (n,)
    fractions: np.ndarray  # shape (n, 3): residential, business, other
    totals: np.ndarray  # MW, shape (n,)

    def __post_init__(self):
        frac = np.asarray(self.fractions, dtype=float)
        tot = np.asarray(self.totals, dtype=float)
        hrs = np.asarray(self.hours if self.hours is not None else np.arange(len(tot)), dtype=int)
        object.__setattr__(self, "fractions", frac)
        object.__setattr__(self, "totals", tot)
        object.__setattr__(self, "hours", hrs)
        if frac.ndim != 2 or frac.shape[1] != 3:
            raise ValidationError(f"fractions must have shape (n, 3), got {frac.shape}")
        n = frac.shape[0]
        if tot.shape != (n,) or hrs.shape != (n,):
            raise ValidationError("hours, fractions and totals disagree in length")
        if n < 3:
            raise ValidationError(f"need at least 3 hours of profile data, got {n}")
        if not (np.all(np.isfinite(frac)) and np.all(np.isfinite(tot))):
            raise ValidationError("non-finite profile entries")
        if np.any(frac < 0) or np.any(frac > 1):
            raise ValidationError("sector fractions must lie in [0, 1]")
        if np.any(tot < 0):
            raise ValidationError("hourly totals must be >= 0")

    @property
    def n_hours(self) -> int:
        return len(self.totals)


@dataclass(frozen=True)
class SectorCapacities:
    r_max: float
    b_max: float
    o_max: float
    residual: float = 0.0  # ||F c - P||_2 of the fit, MW

    def as_array(self) -> np.ndarray:
        return np.array([self.r_max, self.b_max, self.o_max])


@dataclass(frozen=True)
class SectorMW:
    raw: np.ndarray  # (n, 3) fraction * capacity
    shares: np.ndarray  # (n, 3) rows sum to 1 where total > 0, else 0
    mw: np.ndarray  # (n, 3) shares * observed total


def estimate_sector_capacities(profiles: SectorProfileMatrix) -> SectorCapacities:
    x = nnls(profiles.fractions, profiles.totals)
    resid = float(np.linalg.norm(profiles.fractions @ x - profiles.totals))
    return SectorCapacities(float(x[0]), float(x[1]), float(x[2]), resid)


def hourly_sector_mw(profiles: SectorProfileMatrix, caps: SectorCapacities) -> SectorMW:
    """Per-hour sector MW, both raw and rescaled to partition the observed total."""
    raw = profiles.fractions * caps.as_array()[None, :]
    row = raw.sum(axis=1)
    ok = (profiles.totals > 0) & (row > 0)
    shares = np.zeros_like(raw)
    shares[ok] = raw[ok] / row[ok, None]
    return SectorMW(raw=raw, shares=shares, mw=shares * profiles.totals[:, None])


def read_profiles(path) -> SectorProfileMatrix:
    """Parse ``hour_index,r_frac,b_frac,o_frac,total_mw``."""
    cols = ("hour_index", "r_frac", "b_frac", "o_frac", "total_mw")
    hours, fr, tot = [], [], []
    for line, row in read_rows(path, cols):
        hours.append(parse_int(path, line, row, "hour_index"))
        fr.append([parse_float(path, line, row, c) for c in cols[1:4]])
        tot.append(parse_float(path, line, row, "total_mw"))
    return SectorProfileMatrix(np.array(hours, dtype=int), np.array(fr, dtype=float).reshape(-1, 3), np.array(tot))


def write_sectors(path, profiles: SectorProfileMatrix, sector_mw: SectorMW) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour_index", "res_mw", "bus_mw", "oth_mw"])
        for h, (r, b, o) in zip(profiles.hours, sector_mw.mw):
            w.writerow([int(h), f"{r:.6f}", f"{b:.6f}", f"{o:.6f}"])
    return path
