"""Timing comparison of the compiled and numpy load-indicator kernels."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .dual_solver import SolverConfig, solve_dual
from .model import random_scenario


@dataclass(frozen=True)
class BenchResult:
    backend: str
    instances: int
    iterations: int
    seconds: float

    @property
    def per_solve_ms(self) -> float:
        return 1e3 * self.seconds / self.instances


def run(instances: int = 10, num_users: int = 20, num_rats: int = 4, iterations: int = 2000,
        seed: int = 0, alpha: float = 1.0) -> tuple[list[BenchResult], bool]:
    """Solve the same instances with every available backend.

    Returns the timings and whether all backends produced identical final
    load indicators.
    """
    rng = np.random.default_rng(seed)
    scenarios = [random_scenario(rng, num_users, num_rats, alpha) for _ in range(instances)]
    cfg = SolverConfig(max_iterations=iterations)
    results, finals = [], {}
    for name in sorted(_backend.BACKENDS):
        t0 = time.perf_counter()
        finals[name] = [solve_dual(s, cfg, backend=name).lambdas for s in scenarios]
        results.append(BenchResult(name, instances, iterations, time.perf_counter() - t0))
    ref = next(iter(finals.values()))
    same = all(all(np.array_equal(a, b) for a, b in zip(ref, v)) for v in finals.values())
    return results, same
