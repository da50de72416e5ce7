"""The alpha-fair utility family and derived per-user quantities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ZeroThroughput
from .model import Allocation

NEG_INF = -math.inf

# alpha used in place of the max-min limit
MAX_MIN_ALPHA = 16.0


@dataclass(frozen=True)
class UtilityParams:
    alpha: float

    @property
    def rho(self) -> float:
        if self.alpha == 0:
            raise DomainError("rho = 1/alpha is undefined for alpha = 0")
        return 1.0 / self.alpha


def f_alpha(x: float, alpha: float) -> float:
    """log(x) for alpha == 1, else x**(1-alpha)/(1-alpha)."""
    if alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    if alpha >= 1:
        if x <= 0:
            raise DomainError(f"utility undefined at x={x} for alpha={alpha}")
    elif x < 0:
        raise DomainError(f"utility undefined at x={x}")
    if alpha == 1:
        return math.log(x)
    return x ** (1.0 - alpha) / (1.0 - alpha)


def utilities(rates: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorised ``f_alpha``; zero rates map to -inf when alpha >= 1."""
    r = np.asarray(rates, dtype=float)
    if np.any(r < 0):
        raise DomainError("negative rate")
    out = np.empty_like(r)
    pos = r > 0
    if alpha == 1:
        out[pos] = np.log(r[pos])
    else:
        out[pos] = r[pos] ** (1.0 - alpha) / (1.0 - alpha)
    out[~pos] = NEG_INF if alpha >= 1 else 0.0
    return out


def sum_utility(rates, alpha: float) -> float:
    u = utilities(rates, alpha)
    if np.any(np.isneginf(u)):
        return NEG_INF
    return float(u.sum())


def network_utility(alloc: Allocation, alpha: float) -> float:
    return sum_utility(alloc.throughputs, alpha)


def split_ratios(alloc: Allocation, peak_rates: np.ndarray, u: int) -> np.ndarray:
    """Share of user ``u``'s flow the scheduler routes over each RAT."""
    per_rat = alloc.fractions[u] * np.asarray(peak_rates, dtype=float)[u]
    total = per_rat.sum()
    if total <= 0:
        raise ZeroThroughput(u)
    return per_rat / total
