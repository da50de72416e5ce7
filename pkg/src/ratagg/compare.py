"""Policy comparison over scenario sets (the data behind ``agg compare`` / ``agg sweep``)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .baselines import default_grid, greedy_association, threshold_association, tune_thresholds
from .dual_solver import SolverConfig
from .model import Allocation, Scenario
from .pipeline import solve
from .utility import network_utility

POLICIES = ("num", "greedy", "threshold")
COMPARE_COLUMNS = ("scenario", "policy", "utility", "min_rate", "p5_rate", "median_rate", "sum_rate", "splitters")
SWEEP_COLUMNS = ("level", "policy", "scenarios", "mean_utility", "mean_p5_rate", "mean_median_rate", "mean_sum_rate")


def nearest_rank(values, pct: float) -> float:
    """Smallest value with at least ``pct`` percent of the sample at or below it."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empty sample")
    k = max(1, math.ceil(pct / 100.0 * v.size))
    return float(v[k - 1])


@dataclass(frozen=True)
class PolicyRow:
    scenario: str
    policy: str
    utility: float
    min_rate: float
    p5_rate: float
    median_rate: float
    sum_rate: float
    splitters: int

    def as_csv(self) -> list[str]:
        return [self.scenario, self.policy] + [repr(float(x)) for x in
                (self.utility, self.min_rate, self.p5_rate, self.median_rate, self.sum_rate)] + [str(self.splitters)]


def _row(name: str, policy: str, alloc: Allocation, alpha: float, splitters: int = 0) -> PolicyRow:
    r = alloc.throughputs
    return PolicyRow(name, policy, network_utility(alloc, alpha), float(r.min()), nearest_rank(r, 5),
                     nearest_rank(r, 50), float(r.sum()), splitters)


def compare(named: Sequence[tuple[str, Scenario]], config: SolverConfig = SolverConfig(),
            grid=None, primary_rat: int = 0) -> tuple[list[PolicyRow], tuple[float, float]]:
    """Rows for NUM, greedy and threshold association on every scenario.

    Threshold parameters are tuned once over the whole set.
    """
    scenarios = [s for _, s in named]
    if grid is None:
        grid = default_grid(scenarios, primary_rat)
    thresholds, _ = tune_thresholds(scenarios, grid, primary_rat)
    rows = []
    for name, s in named:
        rep = solve(s, config)
        rows.append(_row(name, "num", rep.allocation, s.alpha, rep.splitter_count))
        rows.append(_row(name, "greedy", greedy_association(s), s.alpha))
        th = threshold_association(s, primary_rat, offload_threshold=thresholds[0], snr_proxy_threshold=thresholds[1])
        rows.append(_row(name, "threshold", th, s.alpha))
    rows.sort(key=lambda r: (r.scenario, POLICIES.index(r.policy)))
    return rows, thresholds


def aggregate(level: float, rows: Sequence[PolicyRow]) -> list[list]:
    out = []
    for policy in POLICIES:
        sel = [r for r in rows if r.policy == policy]
        out.append([level, policy, len(sel),
                    float(np.mean([r.utility for r in sel])),
                    float(np.mean([r.p5_rate for r in sel])),
                    float(np.mean([r.median_rate for r in sel])),
                    float(np.mean([r.sum_rate for r in sel]))])
    return out
