"""Independent primal solvers used to check the dual pipeline.

Nothing here imports the dual solver or primal recovery; both routines work
directly on the resource fractions.
"""
from __future__ import annotations

import itertools

import numpy as np

from .errors import TooLarge
from .model import Allocation, Scenario
from .utility import sum_utility


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each column of ``v`` onto the probability simplex.

    Sort-based: with ``s`` sorted descending, the threshold is
    ``theta = (cumsum(s)_k - 1) / k`` for the largest ``k`` with ``s_k > theta``.
    """
    v = np.asarray(v, dtype=float)
    col = v.ndim == 1
    if col:
        v = v[:, None]
    n = v.shape[0]
    s = -np.sort(-v, axis=0)
    css = np.cumsum(s, axis=0) - 1.0
    k = np.arange(1, n + 1)[:, None]
    cond = s - css / k > 0
    rho = n - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[rho, np.arange(v.shape[1])] / (rho + 1)
    out = np.maximum(v - theta, 0.0)
    return out[:, 0] if col else out


def _masked_projection(v, covered):
    # uncovered entries are pushed far below any threshold so they project to 0
    return project_simplex(np.where(covered, v, -1e300))


def _objective(eta, c, alpha):
    return sum_utility((eta * c).sum(axis=1), alpha)


def _gradient(eta, c, alpha):
    r = (eta * c).sum(axis=1)
    return c * (r ** -alpha)[:, None]


def primal_projected_gradient(scenario: Scenario, iters: int = 20_000, step: float | None = None,
                              tol: float = 1e-10) -> Allocation:
    """Accelerated projected gradient ascent on the network utility.

    Columns are projected onto the simplex after every step. The step starts
    at ``1e-2 / L`` for a curvature estimate ``L``, halves whenever the
    quadratic model overestimates the utility and grows slowly otherwise.
    Momentum is reset whenever the utility drops. Returns the best iterate.
    """
    c = scenario.peak_rates
    alpha = scenario.alpha
    covered = c > 0
    eta = np.where(covered, 1.0, 0.0)
    eta = eta / eta.sum(axis=0)
    best = eta.copy()
    best_val = f = _objective(eta, c, alpha)
    if step is None:
        r = (eta * c).sum(axis=1)
        curv = max(alpha, 1e-3) * float(np.max(r ** (-alpha - 1.0) * (c ** 2).sum(axis=1)))
        step = 1e-2 / curv
    y, prev, t = eta.copy(), eta.copy(), 1.0
    stall = 0
    for _ in range(iters):
        fy = _objective(y, c, alpha)
        gy = _gradient(y, c, alpha)
        while True:
            cand = _masked_projection(y + step * gy, covered)
            d = cand - y
            fc = _objective(cand, c, alpha)
            if np.isfinite(fc) and fc >= fy + float((gy * d).sum()) - float((d * d).sum()) / (2.0 * step):
                break
            step *= 0.5
            if step < 1e-300:
                break
        step *= 1.25
        if fc < f:
            # restart momentum from the last accepted point
            y, t = prev.copy(), 1.0
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = cand + ((t - 1.0) / t_next) * (cand - prev)
        y = _masked_projection(y, covered)
        gain = fc - f
        prev, f, t = cand, fc, t_next
        if f > best_val:
            best, best_val = cand.copy(), f
        stall = stall + 1 if gain <= tol * max(1.0, abs(f)) else 0
        if stall >= 20:
            break
    return Allocation.from_fractions(best, scenario)


def _compositions(total: int, slots: int):
    """All ways to write ``total`` as an ordered sum of ``slots`` nonnegative ints."""
    for cuts in itertools.combinations(range(total + slots - 1), slots - 1):
        prev = -1
        parts = []
        for cut in cuts:
            parts.append(cut - prev - 1)
            prev = cut
        parts.append(total + slots - 2 - prev)
        yield parts


def exhaustive_grid(scenario: Scenario, resolution: int) -> Allocation:
    """Best allocation whose fractions are multiples of ``1/resolution``."""
    c = scenario.peak_rates
    U, B = c.shape
    if U * B > 6:
        raise TooLarge(f"exhaustive grid limited to U*B <= 6, got {U * B}")
    if resolution < 10:
        raise ValueError("resolution must be >= 10")
    covered = c > 0
    columns = []
    for b in range(B):
        users = np.flatnonzero(covered[:, b])
        rows = []
        for parts in _compositions(resolution, len(users)):
            col = np.zeros(U)
            col[users] = parts
            rows.append(col / resolution)
        opts = np.array(rows)
        columns.append(opts)
    # rates[i0, i1, ..., u] for every combination of column choices
    rates = np.zeros(tuple(len(o) for o in columns) + (U,))
    for b, opts in enumerate(columns):
        shape = [1] * B + [U]
        shape[b] = len(opts)
        rates = rates + (opts * c[:, b]).reshape(shape)
    flat = rates.reshape(-1, U)
    if scenario.alpha == 1:
        with np.errstate(divide="ignore"):
            vals = np.log(flat).sum(axis=1)
    elif scenario.alpha > 1:
        with np.errstate(divide="ignore"):
            vals = (flat ** (1.0 - scenario.alpha)).sum(axis=1) / (1.0 - scenario.alpha)
        vals[(flat <= 0).any(axis=1)] = -np.inf
    else:
        vals = (flat ** (1.0 - scenario.alpha)).sum(axis=1) / (1.0 - scenario.alpha)
    idx = np.unravel_index(int(np.argmax(vals)), rates.shape[:-1])
    eta = np.stack([columns[b][idx[b]] for b in range(B)], axis=1)
    return Allocation.from_fractions(eta, scenario)


def grid_granularity(scenario: Scenario, optimum: Allocation, resolution: int) -> float:
    """Utility the best grid point can lose against ``optimum``.

    Rounding every column of the optimum to the grid moves each fraction by
    less than ``1/resolution``, so no user loses more than
    ``sum_b c_ub / resolution`` of throughput; concavity bounds the utility
    change by the drop evaluated at that rate.
    """
    c = scenario.peak_rates
    r = optimum.throughputs
    drop = c.sum(axis=1) / resolution
    low = r - drop
    if np.any(low <= 0) and scenario.alpha >= 1:
        return np.inf
    return sum_utility(r, scenario.alpha) - sum_utility(np.maximum(low, 0.0), scenario.alpha)
