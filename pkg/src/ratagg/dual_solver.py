"""Subgradient descent on the RAT load indicators.

The dual objective over the load indicators ``lam`` is

    F(lam) = sum_b lam_b - sum_u log(max_b c_ub / lam_b)                 (alpha == 1)
    F(lam) = sum_b lam_b + 1/(rho-1) * sum_u (max_b c_ub / lam_b)**(rho-1)  (otherwise)

with ``rho = 1/alpha``. Each user attaches to the RAT with the largest rate
indicator ``c_ub / lam_b`` and every RAT moves its indicator along the
negative subgradient ``1 - sum_{u on b} c_ub**(rho-1) / lam_b**rho``.

``polish`` finishes a subgradient run exactly: it is an active-set method on
the same dual program whose working set is a forest of tight
(user, RAT) constraints, which is the structure an optimal allocation has.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _backend
from ._opt_load_py import representatives
from .errors import AlphaZeroUnsupported
from .model import LAMBDA_FLOOR, AssociationMap, DualState, Scenario, Trajectory

log = logging.getLogger(__name__)

SCHEDULES = {"const": 0, "harmonic": 1, "sqrt": 2}


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10_000
    step_schedule: str = "sqrt"
    epsilon0: float = 1.0
    # None: U/B on every RAT
    initial_lambda: Optional[Union[float, Sequence[float]]] = None
    tie_tolerance: float = 1e-6
    stop_tolerance: float = 1e-8
    lambda_floor: float = LAMBDA_FLOOR
    record_lambdas: bool = False
    polish: bool = True
    backend: Optional[str] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_schedule not in SCHEDULES:
            raise ValueError(f"step_schedule must be one of {sorted(SCHEDULES)}")
        for name in ("epsilon0", "tie_tolerance", "stop_tolerance", "lambda_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def step_size(self, i: int) -> float:
        from ._opt_load_py import step_size

        return step_size(SCHEDULES[self.step_schedule], self.epsilon0, i)

    def initial_lambdas(self, scenario: Scenario) -> np.ndarray:
        B = scenario.num_rats
        if self.initial_lambda is None:
            lam = np.full(B, scenario.num_users / B)
        else:
            lam = np.broadcast_to(np.asarray(self.initial_lambda, dtype=float), (B,)).copy()
        if np.any(lam <= 0):
            raise ValueError("initial load indicators must be positive")
        return np.maximum(lam, self.lambda_floor)


def rho_of(alpha: float) -> float:
    if alpha <= 0:
        raise AlphaZeroUnsupported()
    return 1.0 / alpha


def rate_powers(scenario: Scenario) -> np.ndarray:
    """``c_ub ** (rho - 1)`` on covered pairs, computed once per scenario."""
    rho = rho_of(scenario.alpha)
    c = scenario.peak_rates
    out = np.zeros_like(c)
    for (u, b), x in np.ndenumerate(c):
        if x > 0:
            out[u, b] = math.pow(x, rho - 1.0)
    return out


def dual_objective(lambdas, scenario: Scenario) -> float:
    rho_of(scenario.alpha)
    lam = np.asarray(lambdas, dtype=float)
    from ._opt_load_py import objective

    return objective(scenario.peak_rates, lam, scenario.alpha)


def dual_offset(scenario: Scenario) -> float:
    """``F - offset`` is the Lagrange dual function value.

    For alpha == 1 the objective above omits the constant ``-1`` per user that
    maximising ``log r - nu r`` produces.
    """
    return float(scenario.num_users) if scenario.alpha == 1 else 0.0


def associate(lambdas, scenario: Scenario, tie_tolerance: float = 1e-6) -> AssociationMap:
    lam = np.asarray(lambdas, dtype=float)
    c = scenario.peak_rates
    covered = c > 0
    ratio = np.where(covered, c / lam, 0.0)
    thresh = (1.0 - tie_tolerance) * ratio.max(axis=1)
    ties = covered & (ratio >= thresh[:, None])
    best_sets = tuple(frozenset(np.flatnonzero(row).tolist()) for row in ties)
    rep = representatives(c, lam, tie_tolerance)
    rat_users = tuple(tuple(np.flatnonzero(rep == b).tolist()) for b in range(scenario.num_rats))
    return AssociationMap(best_sets, rat_users, tie_tolerance)


def subgradient(lambdas, scenario: Scenario, assoc: AssociationMap) -> np.ndarray:
    rho = rho_of(scenario.alpha)
    lam = np.asarray(lambdas, dtype=float)
    cp = rate_powers(scenario)
    g = np.empty(scenario.num_rats)
    for b, users in enumerate(assoc.rat_users):
        lp = math.pow(lam[b], rho)
        load = 0.0
        for u in users:
            load += cp[u, b] / lp
        g[b] = 1.0 - load
    return g


def _run(scenario: Scenario, config: SolverConfig, lam, start_iter: int, max_steps: int,
         best_f: float, best_lam, backend: Optional[str] = None):
    _, kern = _backend.get(backend if backend is not None else config.backend)
    return kern.opt_load(
        np.ascontiguousarray(scenario.peak_rates),
        rate_powers(scenario),
        np.ascontiguousarray(lam, dtype=float),
        float(scenario.alpha),
        SCHEDULES[config.step_schedule],
        float(config.epsilon0),
        int(start_iter),
        int(max_steps),
        float(config.tie_tolerance),
        float(config.stop_tolerance),
        float(config.lambda_floor),
        bool(config.record_lambdas),
        float(best_f),
        np.ascontiguousarray(best_lam, dtype=float),
    )


def step(state: DualState, config: SolverConfig, scenario: Scenario) -> DualState:
    """One load-indicator update, tracking the best objective seen."""
    rho_of(scenario.alpha)
    lam, _, best_f, best_lam, *_ = _run(
        scenario, config, state.lambdas, state.iteration + 1, 1, state.best_objective, state.best_lambdas
    )
    return DualState(lam, state.iteration + 1, best_f, best_lam, state.history)


def solve_dual(scenario: Scenario, config: SolverConfig = SolverConfig(), backend: Optional[str] = None) -> DualState:
    rho_of(scenario.alpha)
    lam0 = config.initial_lambdas(scenario)
    lam, n, best_f, best_lam, steps, obj, norms, trace, stopped = _run(
        scenario, config, lam0, 1, config.max_iterations, math.inf, lam0, backend
    )
    log.debug("subgradient: %d iterations (stopped=%s), best F=%.12g", n, stopped, best_f)
    hist = Trajectory(lam0, steps, obj, norms, trace)
    return DualState(lam, n, best_f, best_lam, hist)


def subgradient_gap_bound(steps: Sequence[float], initial_lambdas, lambda_star, G: float) -> float:
    """Suboptimality bound of the best iterate after ``len(steps)`` subgradient steps."""
    eps = np.asarray(steps, dtype=float)
    d = np.asarray(initial_lambdas, dtype=float) - np.asarray(lambda_star, dtype=float)
    return float((d @ d + G * G * (eps @ eps)) / (2.0 * eps.sum()))


def write_trace_csv(state: DualState, path) -> None:
    """``iter,lambda_0,...,lambda_{B-1},F,subgrad_norm`` per iteration."""
    h = state.history
    if h is None or h.lambdas is None:
        raise ValueError("trace requires a run with record_lambdas=True")
    B = h.lambdas.shape[1]
    header = ["iter"] + [f"lambda_{b}" for b in range(B)] + ["F", "subgrad_norm"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(h.steps)):
            row = [str(i + 1)] + [repr(float(x)) for x in h.lambdas[i]]
            row += [repr(float(h.objective[i])), repr(float(h.subgrad_norm[i]))]
            fh.write(",".join(row) + "\n")


# --- exact finish -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolishResult:
    lambdas: np.ndarray
    fractions: np.ndarray
    support: np.ndarray
    rounds: int
    converged: bool
    dual_violation: float


def _components(W: np.ndarray):
    U, B = W.shape
    user_comp = np.full(U, -1)
    rat_comp = np.full(B, -1)
    comps = []
    for b0 in range(B):
        if rat_comp[b0] >= 0:
            continue
        cid = len(comps)
        rats, users = [b0], []
        rat_comp[b0] = cid
        queue = deque([("r", b0)])
        while queue:
            kind, x = queue.popleft()
            if kind == "r":
                for u in np.flatnonzero(W[:, x]):
                    if user_comp[u] < 0:
                        user_comp[u] = cid
                        users.append(int(u))
                        queue.append(("u", u))
            else:
                for b in np.flatnonzero(W[x]):
                    if rat_comp[b] < 0:
                        rat_comp[b] = cid
                        rats.append(int(b))
                        queue.append(("r", b))
        comps.append((rats, users))
    return comps, user_comp, rat_comp


def _component_target(W, c, rats, users, rho):
    """Optimal (lam, nu) of one tree component with all its edges tight."""
    k = {rats[0]: 1.0}
    m = {}
    queue = deque([("r", rats[0])])
    while queue:
        kind, x = queue.popleft()
        if kind == "r":
            for u in np.flatnonzero(W[:, x]):
                if u not in m:
                    m[u] = k[x] / c[u, x]
                    queue.append(("u", u))
        else:
            for b in np.flatnonzero(W[x]):
                if b not in k:
                    k[b] = m[x] * c[x, b]
                    queue.append(("r", b))
    # stationarity: sum_b lam_b = sum_u nu_u * r_u with r_u = nu_u**-rho
    t = (sum(mu ** (1.0 - rho) for mu in m.values()) / sum(k.values())) ** (1.0 / rho)
    return {b: t * v for b, v in k.items()}, {u: t * v for u, v in m.items()}


def forest_fractions(W: np.ndarray, c: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Resource fractions on a forest support by leaf elimination.

    A leaf user takes whatever its target rate still needs from its last RAT;
    a leaf RAT gives its remaining budget to its last user.
    """
    U, B = W.shape
    eta = np.zeros((U, B))
    live = W.copy()
    deg_u = live.sum(axis=1)
    deg_b = live.sum(axis=0)
    got_u = np.zeros(U)
    used_b = np.zeros(B)
    stack = [("u", u) for u in range(U) if deg_u[u] == 1] + [("r", b) for b in range(B) if deg_b[b] == 1]
    while stack:
        kind, x = stack.pop()
        if kind == "u":
            if deg_u[x] != 1:
                continue
            u, b = x, int(np.flatnonzero(live[x])[0])
            val = (rates[u] - got_u[u]) / c[u, b]
        else:
            if deg_b[x] != 1:
                continue
            b, u = x, int(np.flatnonzero(live[:, x])[0])
            val = 1.0 - used_b[b]
        eta[u, b] = val
        got_u[u] += val * c[u, b]
        used_b[b] += val
        live[u, b] = False
        deg_u[u] -= 1
        deg_b[b] -= 1
        if deg_u[u] == 1:
            stack.append(("u", u))
        if deg_b[b] == 1:
            stack.append(("r", b))
    return eta


def polish(lambdas, scenario: Scenario, max_rounds: Optional[int] = None,
           floor: float = LAMBDA_FLOOR) -> PolishResult:
    """Move an approximate load-indicator vector to the exact dual optimum.

    Primal active-set method on ``min sum lam + sum phi(nu)`` subject to
    ``nu_u c_ub <= lam_b``. Each round either steps toward the optimum with
    the current tight set held (adding the first constraint that blocks the
    step) or, at that optimum, drops the tight pair with the most negative
    multiplier. The multipliers are the resource fractions.
    """
    rho = rho_of(scenario.alpha)
    c = scenario.peak_rates
    U, B = c.shape
    covered = c > 0
    safe_c = np.where(covered, c, 1.0)
    lam = np.maximum(np.asarray(lambdas, dtype=float), floor)
    nu = np.where(covered, lam / safe_c, np.inf).min(axis=1)
    W = np.zeros((U, B), dtype=bool)
    W[np.arange(U), np.where(covered, lam / safe_c, np.inf).argmin(axis=1)] = True
    if max_rounds is None:
        max_rounds = 20 * (U + B) ** 2

    eta = np.zeros((U, B))
    converged = False
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        comps, user_comp, rat_comp = _components(W)
        lam_hat = np.zeros(B)
        nu_hat = np.zeros(U)
        for rats, users in comps:
            if not users:
                continue
            lk, nm = _component_target(W, c, rats, users, rho)
            for b, v in lk.items():
                lam_hat[b] = v
            for u, v in nm.items():
                nu_hat[u] = v
        cross = covered & ~W & (user_comp[:, None] != rat_comp[None, :])
        g0 = np.maximum(lam[None, :] - nu[:, None] * c, 0.0)
        g1 = lam_hat[None, :] - nu_hat[:, None] * c
        blocking = cross & (g1 < -1e-13 * np.maximum(lam_hat, lam)[None, :])
        if blocking.any():
            tau = np.full((U, B), np.inf)
            tau[blocking] = g0[blocking] / (g0[blocking] - g1[blocking])
            u, b = np.unravel_index(np.argmin(tau), tau.shape)
            if tau[u, b] < 1.0:
                t = tau[u, b]
                lam = lam + t * (lam_hat - lam)
                nu = nu + t * (nu_hat - nu)
                W[u, b] = True
                continue
        lam, nu = lam_hat, nu_hat
        eta = forest_fractions(W, c, nu ** (-rho))
        worst = np.where(W, eta, np.inf)
        u, b = np.unravel_index(np.argmin(worst), worst.shape)
        if worst[u, b] < -1e-12:
            W[u, b] = False
            continue
        converged = True
        break

    viol = np.where(covered, nu[:, None] * c / lam[None, :] - 1.0, -np.inf).max()
    if not converged:
        log.warning("polish did not converge in %d rounds (dual violation %.3g)", rounds, viol)
    return PolishResult(np.maximum(lam, floor), np.clip(eta, 0.0, None), W, rounds, converged, float(max(viol, 0.0)))
