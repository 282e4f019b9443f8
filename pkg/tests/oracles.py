"""Independent reference computations used by the tests.

None of these import solver code from the package; they recompute each
quantity from first principles (enumeration, direct sums, quadrature).
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate, stats


# --------------------------------------------------------------------------- #
# Reserve-gap arithmetic
# --------------------------------------------------------------------------- #
def gap_oracle_ens(load_rows, cap_rows, p_r_min, step):
    """Sum over hours of max(0, load + p_r_min - caps) rounded up to ``step``."""
    total = 0
    for load, caps in zip(load_rows, cap_rows):
        gap = sum(load) + p_r_min - sum(caps)
        if gap > 0:
            total += math.ceil(gap / step - 1e-9) * step
    return total


def interruptible_covers(scale, load_rows, cap_rows, committed, business, p_r_min, step, threshold):
    """Copper-plate replay of interruptible dispatch; True if no hour needs forced shed.

    Interruptible capacity is ``scale * committed``; it ramps up by at most half
    of that per hour, can drop fully in one hour, and when the reserve falls
    below ``threshold`` it is raised in ``step`` increments toward that target.
    """
    level = 0.0
    target = max(threshold, p_r_min)
    for load, caps, com, bus in zip(load_rows, cap_rows, committed, business):
        cap = scale * com
        lo = max(0.0, level - cap)
        hi = max(lo, min(level + 0.5 * cap, cap, bus))
        reserve = sum(caps) - sum(load)
        new = lo
        if reserve + lo < threshold:
            new = min(lo + math.ceil((target - reserve - lo) / step - 1e-9) * step, hi)
        if reserve + new < p_r_min - 1e-9:
            return False
        level = new
    return True


def min_covering_scale(args, lo=1.0, hi=50.0, tol=1e-7):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if interruptible_covers(mid, *args):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------- #
# DC optimal power flow by vertex enumeration
# --------------------------------------------------------------------------- #
def dcopf_vertex_oracle(buses, slack, branches, gens, loads, base=100.0):
    """Minimum-cost DC dispatch by enumerating basic solutions.

    ``branches``: (i, j, x_pu, limit_mw); ``gens``: (bus, cap_mw, cost);
    ``loads``: {bus: mw}. Variables are generator MW and non-slack angles.
    Returns (cost, dispatch) or None when infeasible.
    """
    ng = len(gens)
    free = [b for b in buses if b != slack]
    d = ng + len(free)

    def angle_row(b):
        row = np.zeros(d)
        if b != slack:
            row[ng + free.index(b)] = 1.0
        return row

    eq_a, eq_b = [], []
    for b in buses:
        row = np.zeros(d)
        for g, (gb, _, _) in enumerate(gens):
            if gb == b:
                row[g] = 1.0
        for i, j, x, _ in branches:
            if i == b:
                row -= (angle_row(i) - angle_row(j)) * base / x
            if j == b:
                row += (angle_row(i) - angle_row(j)) * base / x
        eq_a.append(row)
        eq_b.append(loads.get(b, 0.0))
    ineq_a, ineq_b = [], []
    for g, (_, cap, _) in enumerate(gens):
        e = np.zeros(d)
        e[g] = 1.0
        ineq_a += [e, -e]
        ineq_b += [cap, 0.0]
    for i, j, x, lim in branches:
        f = (angle_row(i) - angle_row(j)) * base / x
        ineq_a += [f, -f]
        ineq_b += [lim, lim]
    A_eq, b_eq = np.array(eq_a), np.array(eq_b)
    G, h = np.array(ineq_a), np.array(ineq_b)
    cost = np.array([c for _, _, c in gens] + [0.0] * len(free))

    best = None
    for k in range(0, d + 1):
        for active in itertools.combinations(range(len(G)), k):
            M = np.vstack([A_eq, G[list(active)]]) if active else A_eq
            rhs = np.concatenate([b_eq, h[list(active)]]) if active else b_eq
            if np.linalg.matrix_rank(M) < d:
                continue
            sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
            if np.max(np.abs(M @ sol - rhs)) > 1e-7:
                continue
            if np.any(G @ sol > h + 1e-7):
                continue
            val = float(cost @ sol)
            if best is None or val < best[0] - 1e-12:
                best = (val, sol[:ng].copy())
    return best


# --------------------------------------------------------------------------- #
# Non-negative least squares by passive-set enumeration
# --------------------------------------------------------------------------- #
def nnls_enumeration(A, b):
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    k = A.shape[1]
    best_x, best_r = np.zeros(k), float(np.linalg.norm(b))
    for r in range(1, k + 1):
        for passive in itertools.combinations(range(k), r):
            cols = list(passive)
            sol, *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
            if np.any(sol < 0):
                continue
            x = np.zeros(k)
            x[cols] = sol
            res = float(np.linalg.norm(A @ x - b))
            if res < best_r - 1e-12:
                best_x, best_r = x, res
    return best_x, best_r


def kkt_residual(A, b, x):
    """max of primal infeasibility, dual infeasibility and complementarity."""
    w = A.T @ (b - A @ x)
    return max(float(np.max(-x, initial=0.0)), float(np.max(w, initial=0.0)), float(np.max(np.abs(x * w))))


# --------------------------------------------------------------------------- #
# Densities and statistics
# --------------------------------------------------------------------------- #
def kde_direct(samples, grid, h):
    out = np.empty(len(grid))
    for i, x in enumerate(grid):
        s = 0.0
        for v in samples:
            z = (x - v) / h
            s += math.exp(-0.5 * z * z)
        out[i] = s / (len(samples) * h * math.sqrt(2 * math.pi))
    return out


def pearson_textbook(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    den = math.sqrt(sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))
    return num / den


def truncated_normal_mean(mean, sd):
    """E[X | 0 <= X <= 1] for X ~ N(mean, sd^2), by numerical quadrature."""
    dist = stats.norm(mean, sd)
    mass = dist.cdf(1.0) - dist.cdf(0.0)
    num, _ = integrate.quad(lambda x: x * dist.pdf(x), 0.0, 1.0, points=[mean], epsabs=1e-14)
    return num / mass


def truncated_normal_var(mean, sd):
    dist = stats.norm(mean, sd)
    mass = dist.cdf(1.0) - dist.cdf(0.0)
    m = truncated_normal_mean(mean, sd)
    second, _ = integrate.quad(lambda x: x * x * dist.pdf(x), 0.0, 1.0, points=[mean], epsabs=1e-14)
    return second / mass - m * m
