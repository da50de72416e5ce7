"""End-to-end solve: load indicators, exact finish, fraction recovery, diagnostics."""
from __future__ import annotations

import logging

import numpy as np

from . import _backend
from .dual_solver import SolverConfig, associate, dual_objective, polish, solve_dual, subgradient_gap_bound
from .model import DualState, Scenario, SolveReport
from .primal_recovery import (
    alpha_zero_solution,
    census_violations,
    kkt_residual,
    single_rat_fractions,
    splitter_census,
    splitter_system,
)
from .utility import network_utility

log = logging.getLogger(__name__)


def recover(lambdas, scenario: Scenario, config: SolverConfig = SolverConfig()):
    """Fractions, association and KKT residual for given load indicators."""
    assoc = associate(lambdas, scenario, config.tie_tolerance)
    partial = single_rat_fractions(lambdas, scenario, assoc)
    alloc = splitter_system(lambdas, scenario, assoc, partial)
    return alloc, assoc, kkt_residual(alloc, lambdas, scenario)


def report_from_state(state: DualState, scenario: Scenario, config: SolverConfig = SolverConfig(),
                      message_count: int | None = None) -> SolveReport:
    lam = state.best_lambdas
    if config.polish:
        finished = polish(lam, scenario, floor=config.lambda_floor)
        lam = finished.lambdas
    alloc, assoc, resid = recover(lam, scenario, config)
    census = splitter_census(assoc)
    bad = census_violations(census)
    if bad:
        log.warning("tie groups with too many splitters: %s", bad)
    if len(assoc.splitters) > scenario.num_rats - 1 and scenario.coverage.all():
        log.warning("%d splitters on a fully connected instance with %d RATs",
                    len(assoc.splitters), scenario.num_rats)
    bound = G = float("nan")
    h = state.history
    if h is not None and len(h.steps):
        G = float(h.subgrad_norm.max())
        bound = subgradient_gap_bound(h.steps, h.initial_lambdas, lam, G)
    return SolveReport(
        allocation=alloc,
        lambdas=np.asarray(lam),
        dual_objective=dual_objective(lam, scenario),
        primal_utility=network_utility(alloc, scenario.alpha),
        kkt_residual=resid,
        splitter_count=len(assoc.splitters),
        census=census,
        iterations_used=state.iteration,
        duality_gap_bound=bound,
        subgradient_bound=G,
        message_count=message_count,
        backend=_backend.get(config.backend)[0],
    )


def solve(scenario: Scenario, config: SolverConfig = SolverConfig()) -> SolveReport:
    if scenario.alpha == 0:
        alloc = alpha_zero_solution(scenario)
        total = float(alloc.throughputs.sum())
        # the sum-rate LP's dual optimum equals its primal optimum
        return SolveReport(alloc, None, total, total, 0.0, 0, {}, 0, 0.0, 0.0, None, "closed-form")
    state = solve_dual(scenario, config)
    return report_from_state(state, scenario, config)
