"""Numpy implementation of the load-indicator iteration.

Used when the compiled kernel is unavailable. The per-RAT sums are
accumulated in ascending user order (``np.bincount``) and ``lambda**rho`` is
taken with ``math.pow`` so the lambda trajectory and objective values match
the compiled kernel exactly.
"""
from __future__ import annotations

import math

import numpy as np


def step_size(schedule: int, eps0: float, i: int) -> float:
    if schedule == 0:
        return eps0
    if schedule == 1:
        return eps0 / float(i)
    return eps0 / math.sqrt(float(i))


def objective(rates: np.ndarray, lam: np.ndarray, alpha: float) -> float:
    # sequential sums and libm calls, matching the compiled kernel bit for bit
    covered = rates > 0
    ratio = np.where(covered, rates / lam, 0.0)
    m = ratio.max(axis=1).tolist()
    total = 0.0
    for x in lam.tolist():
        total += x
    users = 0.0
    if alpha == 1.0:
        for x in m:
            users += math.log(x)
        return total + users
    rho = 1.0 / alpha
    for x in m:
        users += math.pow(x, rho - 1.0)
    return total + users / (rho - 1.0)


def representatives(rates: np.ndarray, lam: np.ndarray, tie_tol: float) -> np.ndarray:
    """Lowest RAT index within ``tie_tol`` of each user's best rate indicator."""
    covered = rates > 0
    ratio = np.where(covered, rates / lam, 0.0)
    thresh = (1.0 - tie_tol) * ratio.max(axis=1)
    return np.argmax(covered & (ratio >= thresh[:, None]), axis=1)


def opt_load(rates, rate_pow, lam0, alpha, schedule, eps0, start_iter, max_steps,
             tie_tol, stop_tol, floor, record_lambdas, best_f, best_lam0):
    rates = np.ascontiguousarray(rates, dtype=float)
    rate_pow = np.ascontiguousarray(rate_pow, dtype=float)
    U, B = rates.shape
    rho = 1.0 / alpha
    users = np.arange(U)
    lam = np.array(lam0, dtype=float, copy=True)
    best = np.array(best_lam0, dtype=float, copy=True)
    steps = np.empty(max_steps)
    obj = np.empty(max_steps)
    norms = np.empty(max_steps)
    trace = np.empty((max_steps, B)) if record_lambdas else None
    n = 0
    stopped = False
    for k in range(max_steps):
        eps = step_size(schedule, eps0, start_iter + k)
        f = objective(rates, lam, alpha)
        if record_lambdas:
            trace[k] = lam
        if f < best_f:
            best_f = f
            best[:] = lam
        lampow = np.array([math.pow(x, rho) for x in lam])
        rep = representatives(rates, lam, tie_tol)
        load = np.bincount(rep, weights=rate_pow[users, rep] / lampow[rep], minlength=B)
        g = 1.0 - load
        new = np.maximum(lam + eps * (load - 1.0), floor)
        move = float(np.abs(new - lam).max())
        lam = new
        steps[k] = eps
        obj[k] = f
        norms[k] = math.sqrt(float(g @ g))
        n = k + 1
        if move < stop_tol:
            stopped = True
            break
    f = objective(rates, lam, alpha)
    if f < best_f:
        best_f = f
        best[:] = lam
    return (lam, n, best_f, best, steps[:n], obj[:n], norms[:n],
            trace[:n] if record_lambdas else None, stopped)
