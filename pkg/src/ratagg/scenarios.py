"""Synthetic peak-rate instances from a log-distance path-loss model.

The default layout is one building: a cellular small cell at the centre
(RAT 0) and WLAN access points on a regular grid around it, with users
dropped uniformly at random. Peak rates are Shannon capacities on
non-overlapping bands, so there is no interference term.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateInstance, ScenarioError
from .model import Scenario, validate_scenario

MIN_DISTANCE_M = 1.0
MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class GeneratorParams:
    area_m: float = 50.0
    pathloss_exp: float = 3.5
    # loss at the 1 m reference distance
    ref_loss_db: float = 40.0
    noise_dbm_hz: float = -167.0
    # per-RAT lists; the last entry repeats for any extra RATs
    bandwidths_hz: tuple = (10e6, 20e6)
    tx_powers_dbm: tuple = (24.0, 18.0)
    coverage_radius_m: tuple = (150.0, 20.0)
    # fixed throughput overhead per RAT (1.0 = raw Shannon rate)
    efficiency: tuple = (1.0, 0.5)

    def per_rat(self, name: str, num_rats: int) -> np.ndarray:
        vals = list(getattr(self, name))
        if not vals:
            raise ValueError(f"{name} must not be empty")
        vals = vals + [vals[-1]] * max(0, num_rats - len(vals))
        return np.asarray(vals[:num_rats], dtype=float)

    def validate(self) -> None:
        if self.area_m <= 0 or self.pathloss_exp <= 0:
            raise ValueError("area_m and pathloss_exp must be positive")
        for name in ("bandwidths_hz", "coverage_radius_m", "efficiency"):
            if any(v <= 0 for v in getattr(self, name)):
                raise ValueError(f"{name} entries must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorParams":
        known = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown generator parameters: {sorted(unknown)}")
        return cls(**known)

    @classmethod
    def from_json(cls, path) -> "GeneratorParams":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def ap_positions(num_rats: int, area_m: float) -> np.ndarray:
    """RAT 0 at the centre, the rest on the smallest square grid that fits them."""
    pos = [(area_m / 2, area_m / 2)]
    n = num_rats - 1
    if n > 0:
        side = math.ceil(math.sqrt(n))
        cells = [((i + 0.5) * area_m / side, (j + 0.5) * area_m / side) for j in range(side) for i in range(side)]
        if side * side > n and side % 2 == 1:
            # odd grid: its centre cell would sit on top of RAT 0
            cells.pop(len(cells) // 2)
        pos.extend(cells[:n])
    return np.asarray(pos)


def peak_rates(users_xy: np.ndarray, aps_xy: np.ndarray, params: GeneratorParams) -> np.ndarray:
    B = len(aps_xy)
    d = np.linalg.norm(users_xy[:, None, :] - aps_xy[None, :, :], axis=2)
    d = np.maximum(d, MIN_DISTANCE_M)
    loss_db = params.ref_loss_db + 10.0 * params.pathloss_exp * np.log10(d)
    bw = params.per_rat("bandwidths_hz", B)
    noise_dbm = params.noise_dbm_hz + 10.0 * np.log10(bw)
    snr_db = params.per_rat("tx_powers_dbm", B)[None, :] - loss_db - noise_dbm[None, :]
    cap = params.per_rat("efficiency", B) * bw * np.log2(1.0 + 10.0 ** (snr_db / 10.0))
    return np.where(d <= params.per_rat("coverage_radius_m", B)[None, :], cap, 0.0)


def generate(seed: int, num_users: int, num_rats: int, params: GeneratorParams = GeneratorParams(),
             alpha: float = 1.0) -> Scenario:
    if num_users < 1 or num_rats < 1:
        raise ValueError("need at least one user and one RAT")
    params.validate()
    aps = ap_positions(num_rats, params.area_m)
    labels = ["cell"] + [f"wlan{b}" for b in range(1, num_rats)]
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        users = rng.uniform(0.0, params.area_m, size=(num_users, 2))
        c = peak_rates(users, aps, params)
        try:
            return validate_scenario(Scenario(c, alpha, rat_labels=labels))
        except ScenarioError:
            continue
    raise DegenerateInstance(f"no valid instance for seed {seed} after {MAX_ATTEMPTS} attempts")


@dataclass(frozen=True)
class SweepSpec:
    base_users: int = 10
    num_rats: int = 5
    seeds: int = 20
    base_seed: int = 0
    alpha: float = 1.0
    params: GeneratorParams = field(default_factory=GeneratorParams)


def load_sweep(spec: SweepSpec, levels: Sequence[float]) -> list[list[Scenario]]:
    """One list of snapshots per load level, with user count proportional to the level."""
    if any(lv <= 0 for lv in levels):
        raise ValueError("utilization levels must be positive")
    out = []
    for lv in levels:
        n = max(1, int(round(spec.base_users * lv)))
        out.append([generate(spec.base_seed + k, n, spec.num_rats, spec.params, spec.alpha) for k in range(spec.seeds)])
    return out


def with_tx_power(params: GeneratorParams, rat: int, dbm: float, num_rats: int) -> GeneratorParams:
    powers = params.per_rat("tx_powers_dbm", num_rats)
    powers[rat] = dbm
    return replace(params, tx_powers_dbm=tuple(powers.tolist()))
