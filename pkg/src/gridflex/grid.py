"""Static network model: buses, branches, generators and sector-weighted loads.

CSV layouts (UTF-8, header row, comma separated)::

    buses.csv       id,zone,is_slack[,base_mva]
    branches.csv    from_bus,to_bus,reactance_pu,limit_mw
    generators.csv  id,bus,p_max_mw,cost_per_mwh
    loads.csv       bus,w_residential,w_business,w_other
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from gridflex.constants import DEFAULT_BASE_MVA, WEIGHT_SUM_TOL
from gridflex.errors import ParseError, ValidationError


@dataclass(frozen=True)
class Bus:
    id: int
    zone: str = ""
    is_slack: bool = False


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    reactance: float  # per unit
    limit: float  # MW


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_max_installed: float  # MW
    cost: float  # $/MWh


@dataclass(frozen=True)
class LoadBus:
    bus: int
    # (residential, business, other)
    sector_weights: tuple[float, float, float]

    @property
    def w_residential(self) -> float:
        return self.sector_weights[0]

    @property
    def w_business(self) -> float:
        return self.sector_weights[1]

    @property
    def w_other(self) -> float:
        return self.sector_weights[2]


@dataclass(frozen=True)
class Violation:
    """One failed invariant. ``code`` is stable; ``subject`` names the offending id."""

    code: str
    message: str
    subject: object = None

    def __repr__(self):
        if self.subject is None:
            return self.code
        return f"{self.code}({self.subject})"


@dataclass(frozen=True)
class GridCase:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    load_buses: tuple[LoadBus, ...]
    base_mva: float = DEFAULT_BASE_MVA

    def __post_init__(self):
        for name in ("buses", "branches", "generators", "load_buses"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def slack_index(self) -> int:
        return next(i for i, b in enumerate(self.buses) if b.is_slack)

    @cached_property
    def load_bus_ids(self) -> np.ndarray:
        return np.array([lb.bus for lb in self.load_buses], dtype=int)

    @cached_property
    def sector_weight_matrix(self) -> np.ndarray:
        """(n_load, 3) array of residential/business/other weights."""
        return np.array([lb.sector_weights for lb in self.load_buses], dtype=float).reshape(-1, 3)

    @cached_property
    def gen_capacity(self) -> np.ndarray:
        return np.array([g.p_max_installed for g in self.generators], dtype=float)

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def with_branch_limits(self, factor: float) -> GridCase:
        """Copy with every branch limit multiplied by ``factor``."""
        branches = tuple(
            Branch(br.from_bus, br.to_bus, br.reactance, br.limit * factor) for br in self.branches
        )
        return GridCase(self.buses, branches, self.generators, self.load_buses, self.base_mva)


def validate_case(case: GridCase) -> list[Violation]:
    """Check every structural invariant; returns an empty list for a valid case."""
    out: list[Violation] = []
    seen: set[int] = set()
    for bus in case.buses:
        if bus.id in seen:
            out.append(Violation("DuplicateBusId", f"bus id {bus.id} appears more than once", bus.id))
        seen.add(bus.id)

    n_slack = sum(1 for b in case.buses if b.is_slack)
    if n_slack == 0:
        out.append(Violation("NoSlack", "no slack bus declared"))
    elif n_slack > 1:
        out.append(Violation("MultipleSlack", f"{n_slack} slack buses declared"))

    if not (case.base_mva > 0 and math.isfinite(case.base_mva)):
        out.append(Violation("InvalidBaseMva", f"base_mva must be positive, got {case.base_mva}"))

    for k, br in enumerate(case.branches):
        for end in (br.from_bus, br.to_bus):
            if end not in seen:
                out.append(Violation("DanglingBranch", f"branch {k} references missing bus {end}", end))
        if br.from_bus == br.to_bus:
            out.append(Violation("SelfLoop", f"branch {k} connects bus {br.from_bus} to itself", k))
        if not br.reactance > 0:
            out.append(Violation("NonPositiveReactance", f"branch {k} reactance {br.reactance} <= 0", k))
        if not br.limit > 0:
            out.append(Violation("NonPositiveLimit", f"branch {k} limit {br.limit} <= 0", k))

    gen_ids: set[int] = set()
    for g in case.generators:
        if g.id in gen_ids:
            out.append(Violation("DuplicateGeneratorId", f"generator id {g.id} repeated", g.id))
        gen_ids.add(g.id)
        if g.bus not in seen:
            out.append(Violation("DanglingGenerator", f"generator {g.id} references missing bus {g.bus}", g.bus))
        if not g.p_max_installed >= 0:
            out.append(Violation("NegativeCapacity", f"generator {g.id} p_max {g.p_max_installed} < 0", g.id))
        if not g.cost >= 0:
            out.append(Violation("NegativeCost", f"generator {g.id} cost {g.cost} < 0", g.id))

    load_ids: set[int] = set()
    for lb in case.load_buses:
        if lb.bus in load_ids:
            out.append(Violation("DuplicateLoadBus", f"load bus {lb.bus} listed twice", lb.bus))
        load_ids.add(lb.bus)
        if lb.bus not in seen:
            out.append(Violation("DanglingLoad", f"load references missing bus {lb.bus}", lb.bus))
        w = lb.sector_weights
        if len(w) != 3 or any(not (0.0 <= x <= 1.0) for x in w):
            out.append(Violation("WeightOutOfRange", f"load bus {lb.bus} weights {w} outside [0, 1]", lb.bus))
        elif abs(sum(w) - 1.0) > WEIGHT_SUM_TOL:
            out.append(
                Violation("WeightSum", f"load bus {lb.bus} weights sum to {sum(w):.12g}, expected 1", lb.bus)
            )

    if case.buses and not _connected(case, seen):
        out.append(Violation("Disconnected", "network graph is not connected"))
    return out


def _connected(case: GridCase, ids: set[int]) -> bool:
    index = {bid: i for i, bid in enumerate(sorted(ids))}
    rows, cols = [], []
    for br in case.branches:
        if br.from_bus in index and br.to_bus in index:
            rows.append(index[br.from_bus])
            cols.append(index[br.to_bus])
    n = len(index)
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


def check_case(case: GridCase) -> GridCase:
    """Raise ValidationError listing every violation, else return ``case``."""
    violations = validate_case(case)
    if violations:
        msg = "; ".join(v.message for v in violations)
        raise ValidationError(f"invalid grid case: {msg}", violations)
    return case


# --------------------------------------------------------------------------- #
# CSV ingestion
# --------------------------------------------------------------------------- #
def read_rows(path, required):
    """Yield (line_number, row dict) from a headered CSV, checking the header."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(path, 1, f"missing column(s) {', '.join(missing)}")
        for row in reader:
            if None in row or any(row[c] is None for c in required):
                raise ParseError(path, reader.line_num, "wrong number of fields")
            if all((v or "").strip() == "" for v in row.values()):
                continue
            yield reader.line_num, row


def parse_float(path, line, row, col) -> float:
    text = row[col].strip()
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"column {col!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"column {col!r}: non-finite value {text!r}")
    return value


def parse_int(path, line, row, col) -> int:
    text = row[col].strip()
    try:
        return int(text)
    except ValueError:
        raise ParseError(path, line, f"column {col!r}: not an integer: {text!r}") from None


def _parse_flag(path, line, row, col) -> bool:
    text = row[col].strip()
    if text not in ("0", "1"):
        raise ParseError(path, line, f"column {col!r}: expected 0 or 1, got {text!r}")
    return text == "1"


def load_grid_case(bus_path, branch_path, gen_path, load_path) -> GridCase:
    """Read the four network CSVs and return a validated :class:`GridCase`."""
    buses = []
    base_mva = DEFAULT_BASE_MVA
    for line, row in read_rows(bus_path, ("id", "zone", "is_slack")):
        buses.append(
            Bus(parse_int(bus_path, line, row, "id"), row["zone"].strip(), _parse_flag(bus_path, line, row, "is_slack"))
        )
        if "base_mva" in row and row["base_mva"] not in (None, ""):
            base_mva = parse_float(bus_path, line, row, "base_mva")

    branches = [
        Branch(
            parse_int(branch_path, line, row, "from_bus"),
            parse_int(branch_path, line, row, "to_bus"),
            parse_float(branch_path, line, row, "reactance_pu"),
            parse_float(branch_path, line, row, "limit_mw"),
        )
        for line, row in read_rows(branch_path, ("from_bus", "to_bus", "reactance_pu", "limit_mw"))
    ]
    generators = [
        Generator(
            parse_int(gen_path, line, row, "id"),
            parse_int(gen_path, line, row, "bus"),
            parse_float(gen_path, line, row, "p_max_mw"),
            parse_float(gen_path, line, row, "cost_per_mwh"),
        )
        for line, row in read_rows(gen_path, ("id", "bus", "p_max_mw", "cost_per_mwh"))
    ]
    loads = [
        LoadBus(
            parse_int(load_path, line, row, "bus"),
            tuple(parse_float(load_path, line, row, c) for c in ("w_residential", "w_business", "w_other")),
        )
        for line, row in read_rows(load_path, ("bus", "w_residential", "w_business", "w_other"))
    ]
    return check_case(GridCase(tuple(buses), tuple(branches), tuple(generators), tuple(loads), base_mva))


def write_grid_case(case: GridCase, directory) -> dict[str, Path]:
    """Write the case as the four CSVs; floats use ``repr`` so reloading is exact."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {name: directory / f"{name}.csv" for name in ("buses", "branches", "generators", "loads")}
    with open(paths["buses"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "zone", "is_slack", "base_mva"])
        for b in case.buses:
            w.writerow([b.id, b.zone, int(b.is_slack), repr(float(case.base_mva))])
    with open(paths["branches"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from_bus", "to_bus", "reactance_pu", "limit_mw"])
        for br in case.branches:
            w.writerow([br.from_bus, br.to_bus, repr(float(br.reactance)), repr(float(br.limit))])
    with open(paths["generators"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "bus", "p_max_mw", "cost_per_mwh"])
        for g in case.generators:
            w.writerow([g.id, g.bus, repr(float(g.p_max_installed)), repr(float(g.cost))])
    with open(paths["loads"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus", "w_residential", "w_business", "w_other"])
        for lb in case.load_buses:
            w.writerow([lb.bus, *(repr(float(x)) for x in lb.sector_weights)])
    return paths
