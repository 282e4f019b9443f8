"""Regenerate the bundled 9-bus, 72-hour scarcity fixture.

The CSVs under src/gridflex/data/fixture9 are the source of truth for tests;
this script documents how they were produced. All values are rounded to
whole MW so oracles can be recomputed by hand.
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "gridflex" / "data" / "fixture9"

BUSES = [(1, "west", 1), (2, "north", 0), (3, "coast", 0), (4, "west", 0), (5, "west", 0),
         (6, "coast", 0), (7, "north", 0), (8, "north", 0), (9, "south", 0)]
# (from, to, reactance_pu, limit_mw)
BRANCHES = [(1, 4, 0.0576, 2000), (4, 5, 0.092, 1200), (5, 6, 0.17, 200), (3, 6, 0.0586, 1200),
            (6, 7, 0.1008, 900), (7, 8, 0.072, 1200), (8, 2, 0.0625, 2000), (8, 9, 0.161, 280),
            (9, 4, 0.085, 900)]
GENS = [(1, 1, 1600, 18), (2, 2, 1300, 25), (3, 3, 900, 32)]
# (bus, residential, business, other, share of system load)
LOADS = [(5, 0.55, 0.30, 0.15, 0.22), (6, 0.30, 0.55, 0.15, 0.18),
         (7, 0.45, 0.40, 0.15, 0.27), (9, 0.60, 0.25, 0.15, 0.33)]
HOURS = 72
# Sector peaks used to synthesise the noiseless profile file (MW).
PROFILE_CAPS = (1200.0, 900.0, 400.0)

CONFIG_HEADER = """# Bundled 9-bus, 72-hour scarcity scenario.
buses = buses.csv
branches = {branches}
generators = generators.csv
loads = loads.csv
timeline = timeline.csv
capacity = {capacity}
interruptible_commitment = interruptible_commitment.csv
profiles = profiles.csv
out_dir = out/{name}

# Fixture-scale reliability settings (the system is ~3 GW, not ~70 GW).
p_r_min_mw = 250
shed_step_mw = 25
interrupt_threshold_mw = 350
mechanism_order = interruptible,rationing,incentive
seed = 42

# Portfolio under simulate: no demand response.
interruptible_scale = 0
rationing_max_frac = 0
incentive_coverage = 0

sweep_mechanism = interruptible
sweep_scales = 1,2,4,8

frontier_rationing = 0,0.25,0.5
frontier_incentive_coverage = 0
frontier_tolerance = 0.01
frontier_upper_scale = 50
"""
CONFIGS = {
    "scenario": ("branches.csv", "capacity.csv"),
    "relaxed": ("branches_relaxed.csv", "capacity.csv"),
    "adequate": ("branches.csv", "capacity_adequate.csv"),
}


def _write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def system_load(t):
    daily = 0.5 * (1 - math.cos(2 * math.pi * (t - 4) / 24))  # 0 at 04:00, 1 at 16:00
    cold = math.exp(-0.5 * ((t - 38) / 11.0) ** 2)
    return 2300 + 350 * daily + 650 * cold


def availability(t):
    """Available MW per generator; one broad outage event centred near hour 38."""
    dip = math.exp(-0.5 * ((t - 38) / 9.0) ** 2)
    g1 = 1600 - 650 * dip
    g2 = 1300 - 250 * dip
    g3 = 900 - 150 * math.exp(-0.5 * ((t - 34) / 6.0) ** 2)
    return [round(g1), round(g2), round(g3)]


def profile_rows(hours=48):
    """Smooth sector fractions and exactly consistent totals."""
    rows = []
    for t in range(hours):
        r = round(0.55 + 0.35 * math.sin(2 * math.pi * (t - 13) / 24), 3)
        b = round(0.60 + 0.30 * math.sin(2 * math.pi * (t - 7) / 24), 3)
        o = round(0.80 + 0.10 * math.cos(2 * math.pi * t / 24), 3)
        total = r * PROFILE_CAPS[0] + b * PROFILE_CAPS[1] + o * PROFILE_CAPS[2]
        rows.append((t, r, b, o, repr(total)))
    return rows


def main(out=OUT):
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "buses.csv", ["id", "zone", "is_slack"], BUSES)
    _write(out / "branches.csv", ["from_bus", "to_bus", "reactance_pu", "limit_mw"], BRANCHES)
    _write(out / "branches_relaxed.csv", ["from_bus", "to_bus", "reactance_pu", "limit_mw"],
           [(f, t, x, 100000) for f, t, x, _ in BRANCHES])
    _write(out / "generators.csv", ["id", "bus", "p_max_mw", "cost_per_mwh"], GENS)
    _write(out / "loads.csv", ["bus", "w_residential", "w_business", "w_other"],
           [(b, r, bu, o) for b, r, bu, o, _ in LOADS])

    timeline, capacity, adequate, commit = [], [], [], []
    for t in range(HOURS):
        total = system_load(t)
        for bus, *_w, share in LOADS:
            timeline.append((t, bus, round(total * share)))
        caps = availability(t)
        for (gid, *_), c in zip(GENS, caps):
            capacity.append((t, gid, c))
            adequate.append((t, gid, [g for g in GENS if g[0] == gid][0][2]))
        commit.append((t, 40 + round(10 * math.sin(2 * math.pi * t / 24))))
    _write(out / "timeline.csv", ["hour_index", "bus", "counterfactual_load_mw"], timeline)
    _write(out / "capacity.csv", ["hour_index", "generator_id", "available_mw"], capacity)
    _write(out / "capacity_adequate.csv", ["hour_index", "generator_id", "available_mw"], adequate)
    _write(out / "interruptible_commitment.csv", ["hour_index", "committed_mw"], commit)
    _write(out / "profiles.csv", ["hour_index", "r_frac", "b_frac", "o_frac", "total_mw"], profile_rows())
    for name, (branches, capacity) in CONFIGS.items():
        text = CONFIG_HEADER.format(branches=branches, capacity=capacity, name=name)
        (out / f"{name}.cfg").write_text(text, encoding="utf-8")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else OUT)
