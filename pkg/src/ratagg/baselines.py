"""Single-RAT association policies used as comparison points.

Both policies pin every user to one RAT and then split each RAT's resources
equally among its users. RATs nobody picks stay idle.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .model import Allocation, Scenario
from .utility import network_utility

MAX_PASSES = 100


def equal_share(assignment: Sequence[int], scenario: Scenario) -> Allocation:
    U, B = scenario.peak_rates.shape
    assignment = np.asarray(assignment, dtype=int)
    counts = np.bincount(assignment, minlength=B)
    eta = np.zeros((U, B))
    eta[np.arange(U), assignment] = 1.0 / counts[assignment]
    return Allocation.from_fractions(eta, scenario)


def greedy_assignment(scenario: Scenario) -> np.ndarray:
    """Users join one at a time (by index) on the RAT giving them the best
    equal-share rate, then keep switching until nobody can do strictly better."""
    c = scenario.peak_rates
    U, B = c.shape
    assign = np.full(U, -1)
    load = np.zeros(B, dtype=int)
    for _ in range(MAX_PASSES):
        changed = False
        for u in range(U):
            if assign[u] >= 0:
                load[assign[u]] -= 1
            est = np.where(c[u] > 0, c[u] / (load + 1), -np.inf)
            best = int(np.argmax(est))
            if assign[u] >= 0 and est[assign[u]] >= est[best]:
                best = int(assign[u])
            if best != assign[u]:
                changed = True
            assign[u] = best
            load[best] += 1
        if not changed:
            break
    return assign


def greedy_association(scenario: Scenario) -> Allocation:
    return equal_share(greedy_assignment(scenario), scenario)


def threshold_assignment(scenario: Scenario, primary_rat: int = 0, *, offload_threshold: float,
                         snr_proxy_threshold: float) -> np.ndarray:
    c = scenario.peak_rates
    U, B = c.shape
    others = [b for b in range(B) if b != primary_rat]
    assign = np.full(U, primary_rat)
    for u in range(U):
        alt = max(others, key=lambda b: (c[u, b], -b)) if others else None
        has_alt = alt is not None and c[u, alt] > 0
        if c[u, primary_rat] <= 0:
            # no anchor coverage: the best alternative is the only option
            assign[u] = alt
        elif has_alt and c[u, primary_rat] < offload_threshold and c[u, alt] > snr_proxy_threshold:
            assign[u] = alt
    return assign


def threshold_association(scenario: Scenario, primary_rat: int = 0, *, offload_threshold: float,
                          snr_proxy_threshold: float) -> Allocation:
    """Offload to the best non-primary RAT iff the primary's peak rate is below
    ``offload_threshold`` and that alternative's exceeds ``snr_proxy_threshold``."""
    if offload_threshold < 0 or snr_proxy_threshold < 0:
        raise ValueError("thresholds must be nonnegative")
    a = threshold_assignment(scenario, primary_rat, offload_threshold=offload_threshold,
                             snr_proxy_threshold=snr_proxy_threshold)
    return equal_share(a, scenario)


def _mean_utility(scenarios, primary_rat, offload, snr):
    vals = [network_utility(threshold_association(s, primary_rat, offload_threshold=offload,
                                                  snr_proxy_threshold=snr), s.alpha) for s in scenarios]
    return float(np.mean(vals))


def tune_thresholds(scenarios: Sequence[Scenario], grid: Iterable[tuple[float, float]],
                    primary_rat: int = 0) -> tuple[tuple[float, float], float]:
    """Grid point ``(offload_threshold, snr_proxy_threshold)`` with the best
    mean network utility; ties go to the lexicographically smallest point."""
    points = sorted(set((float(a), float(b)) for a, b in grid))
    if not points:
        raise ValueError("empty threshold grid")
    best_point, best_val = None, -math.inf
    for offload, snr in points:
        val = _mean_utility(scenarios, primary_rat, offload, snr)
        if best_point is None or val > best_val:
            best_point, best_val = (offload, snr), val
    return best_point, best_val


def default_grid(scenarios: Sequence[Scenario], primary_rat: int = 0, size: int = 8) -> list[tuple[float, float]]:
    """Quantiles of the primary and alternative peak rates, plus 0 and inf."""
    prim = np.concatenate([s.peak_rates[:, primary_rat] for s in scenarios])
    alt = np.concatenate([np.delete(s.peak_rates, primary_rat, axis=1).ravel() for s in scenarios])
    qs = np.linspace(0.0, 1.0, size)
    offload = sorted({0.0, math.inf, *np.quantile(prim[prim > 0], qs).tolist()})
    snr = sorted({0.0, math.inf, *np.quantile(alt[alt > 0], qs).tolist()}) if (alt > 0).any() else [0.0]
    return [(a, b) for a in offload for b in snr]
