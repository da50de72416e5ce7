"""Problem instances, allocations and solver state.

Everything here is an immutable value object: arrays are copied on
construction and flagged read-only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import EmptyRat, NegativeAlpha, NonFinite, ScenarioError, ZeroCoverageUser

LAMBDA_FLOOR = 1e-12
SCHEMA_VERSION = 1


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Peak-rate matrix ``peak_rates[u, b]`` (rows are users) plus fairness ``alpha``.

    A zero entry means RAT ``b`` is unavailable to user ``u``.
    """

    peak_rates: np.ndarray
    alpha: float
    user_labels: tuple[str, ...] = ()
    rat_labels: tuple[str, ...] = ()

    def __post_init__(self):
        rates = np.array(self.peak_rates, dtype=float, copy=True)
        if rates.ndim != 2:
            raise ScenarioError(f"peak_rates must be a 2-d matrix, got shape {rates.shape}")
        rates.setflags(write=False)
        object.__setattr__(self, "peak_rates", rates)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "user_labels", tuple(str(s) for s in self.user_labels))
        object.__setattr__(self, "rat_labels", tuple(str(s) for s in self.rat_labels))

    @property
    def num_users(self) -> int:
        return self.peak_rates.shape[0]

    @property
    def num_rats(self) -> int:
        return self.peak_rates.shape[1]

    @property
    def coverage(self) -> np.ndarray:
        return self.peak_rates > 0

    def with_alpha(self, alpha: float) -> "Scenario":
        return Scenario(self.peak_rates, alpha, self.user_labels, self.rat_labels)

    def scaled(self, factor: float) -> "Scenario":
        return Scenario(self.peak_rates * factor, self.alpha, self.user_labels, self.rat_labels)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.peak_rates.shape == other.peak_rates.shape
            and bool(np.array_equal(self.peak_rates, other.peak_rates))
            and self.user_labels == other.user_labels
            and self.rat_labels == other.rat_labels
        )

    __hash__ = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"alpha": self.alpha, "peak_rates": self.peak_rates.tolist()}
        if self.user_labels:
            d["user_labels"] = list(self.user_labels)
        if self.rat_labels:
            d["rat_labels"] = list(self.rat_labels)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Scenario":
        try:
            raw = cls(
                peak_rates=d["peak_rates"],
                alpha=d["alpha"],
                user_labels=d.get("user_labels") or (),
                rat_labels=d.get("rat_labels") or (),
            )
        except KeyError as exc:
            raise ScenarioError(f"scenario is missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from None
        return validate_scenario(raw)


def validate_scenario(raw: Scenario) -> Scenario:
    c = raw.peak_rates
    if c.shape[0] < 1 or c.shape[1] < 1:
        raise ScenarioError("scenario needs at least one user and one RAT")
    if not np.all(np.isfinite(c)) or not math.isfinite(raw.alpha):
        raise NonFinite("peak rates and alpha must be finite")
    if raw.alpha < 0:
        raise NegativeAlpha(f"alpha must be >= 0, got {raw.alpha}")
    if np.any(c < 0):
        raise ScenarioError("peak rates must be nonnegative")
    if raw.user_labels and len(raw.user_labels) != c.shape[0]:
        raise ScenarioError("user_labels length does not match number of users")
    if raw.rat_labels and len(raw.rat_labels) != c.shape[1]:
        raise ScenarioError("rat_labels length does not match number of RATs")
    covered = c > 0
    for u in range(c.shape[0]):
        if not covered[u].any():
            raise ZeroCoverageUser(u)
    for b in range(c.shape[1]):
        if not covered[:, b].any():
            raise EmptyRat(b)
    return raw


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return Scenario.from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=1) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class Allocation:
    """Resource fractions ``fractions[u, b]`` and the resulting per-user throughputs."""

    fractions: np.ndarray
    throughputs: np.ndarray

    @classmethod
    def from_fractions(cls, fractions, scenario: Scenario) -> "Allocation":
        eta = np.array(fractions, dtype=float, copy=True)
        r = (eta * scenario.peak_rates).sum(axis=1)
        return cls(_frozen(eta), _frozen(r))

    def __post_init__(self):
        object.__setattr__(self, "fractions", _frozen(self.fractions))
        object.__setattr__(self, "throughputs", _frozen(self.throughputs))


def assert_feasible(alloc: Allocation, scenario: Scenario, tol: float = 1e-9, allow_idle: bool = False) -> None:
    """Raise ``AssertionError`` unless ``alloc`` satisfies the resource constraints.

    With ``allow_idle`` a RAT column may also sum to zero (single-RAT
    baselines leave unused RATs idle).
    """
    eta = alloc.fractions
    c = scenario.peak_rates
    assert eta.shape == c.shape, f"shape {eta.shape} != {c.shape}"
    assert np.all(eta >= -tol) and np.all(eta <= 1 + tol), "fractions outside [0, 1]"
    assert not np.any((eta > tol) & (c <= 0)), "positive fraction on an uncovered pair"
    sums = eta.sum(axis=0)
    ok = np.abs(sums - 1.0) <= tol
    if allow_idle:
        ok |= np.abs(sums) <= tol
    assert np.all(ok), f"column sums {sums} violate the per-RAT budget"
    r = (eta * c).sum(axis=1)
    assert np.allclose(alloc.throughputs, r, rtol=1e-12, atol=0.0), "throughputs inconsistent with fractions"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-iteration record of a subgradient run.

    Row ``i`` describes iterate ``i+1``: its step size, dual objective and
    subgradient norm. ``lambdas`` holds the iterates themselves when recorded.
    """

    initial_lambdas: np.ndarray
    steps: np.ndarray
    objective: np.ndarray
    subgrad_norm: np.ndarray
    lambdas: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("initial_lambdas", "steps", "objective", "subgrad_norm"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.lambdas is not None:
            object.__setattr__(self, "lambdas", _frozen(self.lambdas))


@dataclass(frozen=True, eq=False)
class DualState:
    lambdas: np.ndarray
    iteration: int = 0
    best_objective: float = math.inf
    best_lambdas: Optional[np.ndarray] = None
    history: Optional[Trajectory] = None

    def __post_init__(self):
        object.__setattr__(self, "lambdas", _frozen(self.lambdas))
        best = self.lambdas if self.best_lambdas is None else self.best_lambdas
        object.__setattr__(self, "best_lambdas", _frozen(best))


@dataclass(frozen=True)
class AssociationMap:
    """Tie sets per user and the representative user set of each RAT."""

    best_sets: tuple[frozenset, ...]
    rat_users: tuple[tuple[int, ...], ...]
    tie_tolerance: float

    @property
    def splitters(self) -> list[int]:
        return [u for u, s in enumerate(self.best_sets) if len(s) >= 2]


@dataclass(frozen=True, eq=False)
class SolveReport:
    allocation: Allocation
    lambdas: Optional[np.ndarray]
    dual_objective: float
    primal_utility: float
    kkt_residual: float
    splitter_count: int
    census: dict = field(default_factory=dict)
    iterations_used: int = 0
    duality_gap_bound: float = 0.0
    subgradient_bound: float = 0.0
    message_count: Optional[int] = None
    backend: str = ""

    def to_dict(self, scenario: Optional[Scenario] = None) -> dict[str, Any]:
        d: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "fractions": self.allocation.fractions.tolist(),
            "throughputs": self.allocation.throughputs.tolist(),
            "lambdas": None if self.lambdas is None else self.lambdas.tolist(),
            "dual_objective": self.dual_objective,
            "primal_utility": _json_float(self.primal_utility),
            "kkt_residual": self.kkt_residual,
            "splitter_count": self.splitter_count,
            "splitters": [{"rats": list(k), "users": v} for k, v in sorted(self.census.items())],
            "iterations_used": self.iterations_used,
            "duality_gap_bound": _json_float(self.duality_gap_bound),
            # G is the largest subgradient norm seen on the trajectory, not a global bound
            "gap_bound_G": self.subgradient_bound,
            "gap_bound_G_is_empirical": True,
            "message_count": self.message_count,
            "backend": self.backend,
        }
        if scenario is not None:
            d["alpha"] = scenario.alpha
            d["num_users"] = scenario.num_users
            d["num_rats"] = scenario.num_rats
        return d


def _json_float(x: float):
    if math.isfinite(x):
        return x
    return "-inf" if x < 0 else "inf"


def random_scenario(rng: np.random.Generator, num_users: int, num_rats: int, alpha: float,
                    low: float = 10.0, high: float = 100.0, coverage_prob: float = 1.0) -> Scenario:
    """Uniform random peak rates; used by tests, benchmarks and the acceptance run."""
    while True:
        c = rng.uniform(low, high, size=(num_users, num_rats))
        if coverage_prob < 1.0:
            c = np.where(rng.random(c.shape) < coverage_prob, c, 0.0)
        if (c > 0).any(axis=1).all() and (c > 0).any(axis=0).all():
            return Scenario(c, alpha)

