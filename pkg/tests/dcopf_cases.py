"""Seeded random cases with at most three buses, shared by unit and acceptance tests."""

import numpy as np

from gridflex.grid import Branch, Bus, Generator, GridCase, LoadBus

TOPOLOGIES = {
    2: [[(1, 2)]],
    3: [[(1, 2), (2, 3)], [(1, 2), (1, 3)], [(1, 2), (2, 3), (1, 3)], [(1, 3), (2, 3)]],
}


def random_small_case(rng):
    """Return (case, caps, loads, oracle_args) for one random instance."""
    n = int(rng.integers(1, 4))
    buses = list(range(1, n + 1))
    edges = [] if n == 1 else TOPOLOGIES[n][int(rng.integers(len(TOPOLOGIES[n])))]
    branches = [(i, j, float(rng.uniform(0.05, 0.4)), float(rng.uniform(20, 150))) for i, j in edges]
    ng = int(rng.integers(1, 4))
    gens = [(int(rng.integers(1, n + 1)), float(rng.uniform(20, 150)), float(rng.integers(1, 6))) for _ in range(ng)]
    load_at = sorted({int(b) for b in rng.choice(buses, size=int(rng.integers(1, n + 1)), replace=False)})
    loads = {b: float(rng.uniform(5, 120)) for b in load_at}
    case = GridCase(
        buses=tuple(Bus(b, "z", b == 1) for b in buses),
        branches=tuple(Branch(i, j, x, lim) for i, j, x, lim in branches),
        generators=tuple(Generator(k + 1, b, cap, cost) for k, (b, cap, cost) in enumerate(gens)),
        load_buses=tuple(LoadBus(b, (1.0, 0.0, 0.0)) for b in load_at),
    )
    caps = np.array([g[1] for g in gens])
    load = np.array([loads[b] for b in load_at])
    return case, caps, load, (buses, 1, branches, gens, loads)


def cases(seed=2024, count=300):
    rng = np.random.default_rng(seed)
    return [random_small_case(rng) for _ in range(count)]
