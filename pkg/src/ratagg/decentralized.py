"""Message-passing realisation of the load-indicator iteration.

Each round, in lock step:

1. every RAT broadcasts its load indicator (``LoadBroadcast``);
2. every UE picks the RAT with the best rate indicator and reports its
   ``c_ub ** (rho-1)`` term to that RAT (``SelectionReport``);
3. every RAT folds the reports it received into its local subgradient, moves
   its indicator with the shared step size and tells the flow scheduler
   (``LambdaUpdate``).

The arithmetic matches the centralised kernel in the same order, so the
lambda trajectory is bit-identical. Fractions are recovered centrally at the
flow scheduler once the indicators settle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .dual_solver import SolverConfig, dual_objective, rho_of
from .model import DualState, Scenario, Trajectory

LOAD_BROADCAST = "LoadBroadcast"
SELECTION_REPORT = "SelectionReport"
LAMBDA_UPDATE = "LambdaUpdate"

SCHEDULER = "scheduler"
BROADCAST = "all-ues"

FLOAT_BYTES = 8
INDEX_BYTES = 4


@dataclass(frozen=True)
class Message:
    round: int
    kind: str
    sender: str
    receiver: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"round": self.round, "kind": self.kind, "from": self.sender,
                           "to": self.receiver, "payload": self.payload})


@dataclass
class ProtocolTrace:
    rounds: int = 0
    message_count: int = 0
    payload_bytes: int = 0
    final_lambdas: Optional[np.ndarray] = None
    messages: list = field(default_factory=list)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for msg in self.messages:
                fh.write(msg.to_json() + "\n")


def rat_id(b: int) -> str:
    return f"rat:{b}"


def ue_id(u: int) -> str:
    return f"ue:{u}"


class RatAgent:
    def __init__(self, index: int, lam: float, rho: float, floor: float):
        self.index = index
        self.lam = lam
        self.rho = rho
        self.floor = floor

    def broadcast(self, rnd: int) -> Message:
        return Message(rnd, LOAD_BROADCAST, rat_id(self.index), BROADCAST, {"rat": self.index, "lambda": self.lam})

    def update(self, rnd: int, step: float, reports: list[Message]) -> Message:
        """Apply one subgradient move from this RAT's own reports only."""
        lampow = math.pow(self.lam, self.rho)
        load = 0.0
        for msg in reports:
            load += msg.payload["c_term"] / lampow
        new = self.lam + step * (load - 1.0)
        if new < self.floor:
            new = self.floor
        old, self.lam = self.lam, new
        return Message(rnd, LAMBDA_UPDATE, rat_id(self.index), SCHEDULER,
                       {"rat": self.index, "lambda": new, "previous": old, "subgradient": 1.0 - load})


class UeAgent:
    def __init__(self, index: int, peak_rates: np.ndarray, rho: float, tie_tol: float):
        self.index = index
        self.rates = [float(x) for x in peak_rates]
        self.terms = [math.pow(x, rho - 1.0) if x > 0 else 0.0 for x in self.rates]
        self.tie_tol = tie_tol

    def select(self, rnd: int, broadcasts: list[Message]) -> Message:
        lam = {m.payload["rat"]: m.payload["lambda"] for m in broadcasts}
        best = 0.0
        for b, c in enumerate(self.rates):
            if c > 0.0 and c / lam[b] > best:
                best = c / lam[b]
        thresh = (1.0 - self.tie_tol) * best
        choice = next(b for b, c in enumerate(self.rates) if c > 0.0 and c / lam[b] >= thresh)
        return Message(rnd, SELECTION_REPORT, ue_id(self.index), rat_id(choice),
                       {"user": self.index, "rat": choice, "c_term": self.terms[choice]})


def _report_bytes(assume_csi_at_rat: bool) -> int:
    return 2 * INDEX_BYTES + (0 if assume_csi_at_rat else FLOAT_BYTES)


def run_decentralized(scenario: Scenario, config: SolverConfig = SolverConfig(), rounds: Optional[int] = None,
                      keep_messages: bool = True, assume_csi_at_rat: bool = False) -> tuple[DualState, ProtocolTrace]:
    rho = rho_of(scenario.alpha)
    n_rounds = config.max_iterations if rounds is None else rounds
    lam0 = config.initial_lambdas(scenario)
    rats = [RatAgent(b, float(lam0[b]), rho, config.lambda_floor) for b in range(scenario.num_rats)]
    ues = [UeAgent(u, scenario.peak_rates[u], rho, config.tie_tolerance) for u in range(scenario.num_users)]
    trace = ProtocolTrace()
    report_bytes = _report_bytes(assume_csi_at_rat)

    best_f, best_lam = math.inf, lam0.copy()
    steps, objective, norms, lam_rows = [], [], [], []

    def emit(msgs: list[Message], nbytes: int) -> None:
        trace.message_count += len(msgs)
        trace.payload_bytes += nbytes * len(msgs)
        if keep_messages:
            trace.messages.extend(msgs)

    for rnd in range(1, n_rounds + 1):
        step = config.step_size(rnd)
        # scheduler-side bookkeeping of the dual objective (not part of the protocol)
        lam_now = np.array([r.lam for r in rats])
        f = dual_objective(lam_now, scenario)
        if f < best_f:
            best_f, best_lam = f, lam_now
        if config.record_lambdas:
            lam_rows.append(lam_now)

        broadcasts = [r.broadcast(rnd) for r in rats]
        emit(broadcasts, INDEX_BYTES + FLOAT_BYTES)
        reports = [ue.select(rnd, broadcasts) for ue in ues]
        emit(reports, report_bytes)
        inbox: dict[int, list[Message]] = {b: [] for b in range(len(rats))}
        for msg in reports:
            inbox[msg.payload["rat"]].append(msg)
        updates = [r.update(rnd, step, inbox[r.index]) for r in rats]
        emit(updates, INDEX_BYTES + FLOAT_BYTES)

        trace.rounds = rnd
        steps.append(step)
        objective.append(f)
        norms.append(math.sqrt(sum(m.payload["subgradient"] ** 2 for m in updates)))
        move = max(abs(m.payload["lambda"] - m.payload["previous"]) for m in updates)
        if move < config.stop_tolerance:
            break

    lam = np.array([r.lam for r in rats])
    f = dual_objective(lam, scenario)
    if f < best_f:
        best_f, best_lam = f, lam
    trace.final_lambdas = lam
    hist = Trajectory(lam0, steps, objective, norms, np.array(lam_rows) if config.record_lambdas else None)
    return DualState(lam, trace.rounds, best_f, best_lam, hist), trace


def expected_message_count(rounds: int, num_users: int, num_rats: int) -> int:
    return rounds * (2 * num_rats + num_users)


def summary(trace: ProtocolTrace) -> dict[str, Any]:
    return {"rounds": trace.rounds, "message_count": trace.message_count, "payload_bytes": trace.payload_bytes}
