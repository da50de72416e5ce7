"""Recover resource fractions from converged load indicators.

Users with a single best RAT get ``c**(rho-1) / lam**rho`` of it. Users tied
between several RATs ("splitters") share whatever those RATs have left, found
from the linear system that pins each splitter's throughput to
``max_b (c_ub/lam_b)**(1/alpha)`` and each RAT's budget to one.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .dual_solver import rho_of
from .errors import InfeasibleTieStructure, NegativeFraction, TieSetTooLarge, TooManySplitters
from .model import Allocation, AssociationMap, Scenario

CLAMP_TOL = 1e-7
RESIDUAL_TOL = 1e-6


def target_rates(lambdas, scenario: Scenario) -> np.ndarray:
    """``max_b (c_ub / lam_b) ** (1/alpha)`` per user."""
    c = scenario.peak_rates
    ratio = np.where(c > 0, c / np.asarray(lambdas, dtype=float), 0.0)
    return ratio.max(axis=1) ** (1.0 / scenario.alpha)


def single_rat_fractions(lambdas, scenario: Scenario, assoc: AssociationMap) -> np.ndarray:
    """Fractions for non-splitters; splitter rows are left at zero."""
    rho = rho_of(scenario.alpha)
    c = scenario.peak_rates
    lam = np.asarray(lambdas, dtype=float)
    eta = np.zeros_like(c)
    for u, rats in enumerate(assoc.best_sets):
        if len(rats) == 1:
            (b,) = rats
            eta[u, b] = math.pow(c[u, b], rho - 1.0) / math.pow(lam[b], rho)
    return eta


def _clamp(eta: np.ndarray) -> np.ndarray:
    if np.any(eta < -CLAMP_TOL):
        u, b = np.unravel_index(np.argmin(eta), eta.shape)
        raise NegativeFraction(f"fraction {eta[u, b]:.3g} for user {u} on RAT {b}")
    if np.any(eta > 1 + CLAMP_TOL):
        raise NegativeFraction("fraction above one; another user on that RAT would go negative")
    return np.clip(eta, 0.0, 1.0)


def splitter_system(lambdas, scenario: Scenario, assoc: AssociationMap, partial: np.ndarray) -> Allocation:
    c = scenario.peak_rates
    U, B = c.shape
    splitters = assoc.splitters
    unknowns = [(u, b) for u in splitters for b in sorted(assoc.best_sets[u])]
    target = target_rates(lambdas, scenario)
    leftover = 1.0 - partial.sum(axis=0)

    n_eq = len(splitters) + B
    A = np.zeros((n_eq, len(unknowns)))
    y = np.zeros(n_eq)
    row_of = {u: i for i, u in enumerate(splitters)}
    for j, (u, b) in enumerate(unknowns):
        # throughput rows scaled by the target so residuals are relative
        A[row_of[u], j] = c[u, b] / target[u]
        A[len(splitters) + b, j] = 1.0
    y[: len(splitters)] = 1.0
    y[len(splitters):] = leftover

    if unknowns:
        x, *_ = np.linalg.lstsq(A, y, rcond=None)
    else:
        x = np.zeros(0)
    resid = float(np.abs(A @ x - y).max()) if n_eq else 0.0
    if resid > RESIDUAL_TOL:
        raise InfeasibleTieStructure(
            f"splitter system residual {resid:.3g} > {RESIDUAL_TOL:g}; "
            f"tie sets are inconsistent with the load indicators (try a tighter tie tolerance "
            f"than {assoc.tie_tolerance:g} or a converged lambda)"
        )
    eta = partial.copy()
    for (u, b), val in zip(unknowns, x):
        eta[u, b] = val
    return Allocation.from_fractions(_clamp(eta), scenario)


def two_rat_closed_form(lambdas, scenario: Scenario, assoc: AssociationMap, partial: np.ndarray) -> Allocation:
    """Each two-RAT splitter takes the leftover budget on both of its RATs.

    Valid only when every tie set has at most two RATs and no RAT is shared
    by two splitters.
    """
    leftover = 1.0 - partial.sum(axis=0)
    eta = partial.copy()
    owner: dict[int, int] = {}
    pairs: dict[tuple, int] = {}
    for u in assoc.splitters:
        rats = tuple(sorted(assoc.best_sets[u]))
        if len(rats) > 2:
            raise TieSetTooLarge(f"user {u} ties across {len(rats)} RATs {rats}")
        if rats in pairs:
            raise TooManySplitters(f"users {pairs[rats]} and {u} both split over RAT pair {rats}")
        pairs[rats] = u
        for b in rats:
            if b in owner:
                raise TooManySplitters(f"users {owner[b]} and {u} both split over RAT {b}")
            owner[b] = u
            eta[u, b] = leftover[b]
    return Allocation.from_fractions(_clamp(eta), scenario)


def alpha_zero_solution(scenario: Scenario) -> Allocation:
    """Sum-rate optimum: each RAT goes entirely to its fastest user (lowest index on ties)."""
    c = scenario.peak_rates
    eta = np.zeros_like(c)
    eta[np.argmax(c, axis=0), np.arange(c.shape[1])] = 1.0
    return Allocation.from_fractions(eta, scenario)


def kkt_residual(alloc: Allocation, lambdas, scenario: Scenario, alpha: float | None = None) -> float:
    """Relative throughput mismatch against the dual targets plus budget violation."""
    if alpha is None:
        alpha = scenario.alpha
    rho_of(alpha)
    target = target_rates(lambdas, scenario.with_alpha(alpha))
    rate_err = float(np.max(np.abs(alloc.throughputs - target) / target))
    budget_err = float(np.max(np.abs(alloc.fractions.sum(axis=0) - 1.0)))
    return rate_err + budget_err


def splitter_census(assoc: AssociationMap) -> dict[tuple, int]:
    """Number of users per distinct tie set of two or more RATs."""
    return dict(Counter(tuple(sorted(s)) for s in assoc.best_sets if len(s) >= 2))


def census_violations(census: dict[tuple, int]) -> list[tuple]:
    """Tie groups of ``M`` RATs shared by ``M`` or more splitters."""
    return [rats for rats, n in census.items() if n > len(rats) - 1]
