"""Reliability metrics: energy not served, correlation, shed-density curves."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from gridflex.constants import KDE_GRID_PAD, KDE_GRID_POINTS
from gridflex.errors import DegenerateSeries, InvalidBandwidth

if TYPE_CHECKING:
    from gridflex.engine import HourResult

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class SimulationReport:
    hours: list[HourResult]
    ens: float = 0.0  # MWh
    correlation_vs_reference: float | None = None
    density: tuple[np.ndarray, np.ndarray] | None = None

    def forced_shed_series(self) -> np.ndarray:
        return np.array([h.forced_shed_total for h in self.hours])

    def mechanism_series(self, kind) -> np.ndarray:
        return np.array([h.dr_total(kind) for h in self.hours])

    def hour_indices(self) -> np.ndarray:
        return np.array([h.hour for h in self.hours], dtype=int)


def ens(report) -> float:
    """Energy not served (MWh): hourly forced shed summed over 1 h blocks.

    Demand-response reductions are not counted. Accepts a report, a list of
    hour results, or a plain series of hourly forced-shed MW.
    """
    if isinstance(report, SimulationReport):
        series = report.forced_shed_series()
    else:
        items = list(report)
        if items and hasattr(items[0], "forced_shed_total"):
            series = np.array([h.forced_shed_total for h in items])
        else:
            series = np.asarray(items, dtype=float)
    if series.size == 0:
        raise ValueError("ens needs at least one hour")
    return float(np.sum(series) * 1.0)


def pearson(a, b) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-D and of equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSeries("zero-variance series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def silverman_bandwidth(samples) -> float:
    """Silverman's rule; falls back to the std, then to 1 MW, for flat samples."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        return 1.0
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = (q75 - q25) / 1.34
    spread = min(sd, iqr) if iqr > 0 else sd
    if spread <= 0:
        return 1.0
    return 0.9 * spread * len(x) ** (-0.2)


def default_bandwidth(samples) -> float:
    """Silverman's rule, floored at one grid spacing of the sample range.

    A tiny interquartile range can make Silverman's value much narrower than
    the 512-point evaluation grid can resolve; the floor keeps the kernels
    several grid points wide so the curve still integrates to one.
    """
    x = np.asarray(samples, dtype=float)
    resolution = float(np.ptp(x)) / (KDE_GRID_POINTS - 1) if x.size else 0.0
    # Relative floor: keeps near-constant samples far above float spacing.
    precision = 1e-9 * max(1.0, float(np.max(np.abs(x)))) if x.size else 0.0
    return max(silverman_bandwidth(x), resolution, precision)


def shed_density(samples, bandwidth: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian KDE on a uniform 512-point grid over [min - 4h, max + 4h]."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("shed_density needs at least one sample")
    h = default_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not (h > 0 and math.isfinite(h)):
        raise InvalidBandwidth(f"bandwidth must be positive and finite, got {bandwidth}")
    grid = np.linspace(x.min() - KDE_GRID_PAD * h, x.max() + KDE_GRID_PAD * h, KDE_GRID_POINTS)
    dens = np.zeros_like(grid)
    # Chunk over samples to bound memory for long series.
    for start in range(0, x.size, 4096):
        z = (grid[:, None] - x[None, start:start + 4096]) / h
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    dens /= x.size * h * _SQRT_2PI
    return grid, dens


def write_report_csv(path, report: SimulationReport) -> Path:
    from gridflex.flex import MechanismKind

    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour_index", "served_mw", "forced_shed_mw", "interruptible_mw",
                    "rationing_mw", "incentive_mw", "reserve_mw"])
        for h in report.hours:
            w.writerow([
                h.hour,
                f"{h.served.sum():.6f}",
                f"{h.forced_shed_total:.6f}",
                f"{h.dr_total(MechanismKind.INTERRUPTIBLE):.6f}",
                f"{h.dr_total(MechanismKind.RATIONING):.6f}",
                f"{h.dr_total(MechanismKind.INCENTIVE):.6f}",
                f"{h.reserve:.6f}",
            ])
    return path


def write_density_csv(path, curve: tuple[np.ndarray, np.ndarray]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_mw", "density"])
        for xv, dv in zip(*curve):
            w.writerow([f"{xv:.6f}", f"{dv:.9e}"])
    return path


def concat_reports(reports: Iterable[SimulationReport]) -> SimulationReport:
    hours = [h for r in reports for h in r.hours]
    return SimulationReport(hours=hours, ens=ens(hours) if hours else 0.0)
