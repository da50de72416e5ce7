"""``agg`` command line interface.

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 decentralized
verification mismatch. Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, scenarios
from .compare import COMPARE_COLUMNS, SWEEP_COLUMNS, aggregate, compare
from .decentralized import run_decentralized, summary
from .dual_solver import SolverConfig, solve_dual, write_trace_csv
from .errors import RatAggError, ScenarioError, SolverError, VerifyMismatch
from .model import Allocation, Scenario, load_scenario, save_scenario, validate_scenario
from .pipeline import report_from_state, solve
from .utility import network_utility

log = logging.getLogger("ratagg")

EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 1, 2, 3


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="override the scenario's fairness parameter")
    p.add_argument("--iters", type=int, default=SolverConfig.max_iterations, help="max subgradient iterations")
    p.add_argument("--step", choices=["sqrt", "harmonic", "const"], default="sqrt", help="step-size schedule")
    p.add_argument("--eps0", type=float, default=1.0, help="base step size")
    p.add_argument("--tie-tol", type=float, default=1e-6, help="relative tolerance for rate-indicator ties")
    p.add_argument("--no-polish", action="store_true", help="skip the exact active-set finish")
    p.add_argument("--rate-unit", default="auto",
                   help="divide peak rates by this before solving ('auto' = largest peak rate, 'none' = 1)")


def _config(args, **overrides) -> SolverConfig:
    kw = dict(max_iterations=args.iters, step_schedule=args.step, epsilon0=args.eps0,
              tie_tolerance=args.tie_tol, polish=not args.no_polish)
    kw.update(overrides)
    return SolverConfig(**kw)


def _rate_unit(args, scenario: Scenario) -> float:
    if args.rate_unit == "auto":
        return float(scenario.peak_rates.max())
    if args.rate_unit == "none":
        return 1.0
    unit = float(args.rate_unit)
    if unit <= 0:
        raise ScenarioError("--rate-unit must be positive")
    return unit


def _load(args) -> Scenario:
    s = load_scenario(args.scenario)
    if args.alpha is not None:
        s = validate_scenario(s.with_alpha(args.alpha))
    return s


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


def _report_dict(rep, scenario: Scenario, unit: float) -> dict:
    # fractions do not depend on the rate unit; throughputs are in the scenario's own units
    alloc = Allocation.from_fractions(rep.allocation.fractions, scenario)
    d = rep.to_dict(scenario)
    d["throughputs"] = alloc.throughputs.tolist()
    d["primal_utility"] = network_utility(alloc, scenario.alpha)
    d["rate_unit"] = unit
    return d


def cmd_solve(args) -> int:
    scenario = _load(args)
    unit = _rate_unit(args, scenario)
    work = scenario.scaled(1.0 / unit) if unit != 1.0 else scenario
    cfg = _config(args, record_lambdas=bool(args.trace))
    if scenario.alpha == 0:
        rep = solve(work, cfg)
    else:
        state = solve_dual(work, cfg)
        if args.trace:
            write_trace_csv(state, args.trace)
        rep = report_from_state(state, work, cfg)
    out = _report_dict(rep, scenario, unit)
    _write_json(args.out, out)
    log.info("utility %.6g, kkt residual %.3g, %d splitters", out["primal_utility"], rep.kkt_residual,
             rep.splitter_count)
    return 0


def _scenario_files(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise ScenarioError(f"{directory}: not a directory")
    files = sorted(d.glob("*.json"))
    if not files:
        raise ScenarioError(f"{directory}: no scenario files")
    return files


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_compare(args) -> int:
    named = []
    for f in _scenario_files(args.scenario_dir):
        s = load_scenario(f)
        if args.alpha is not None:
            s = validate_scenario(s.with_alpha(args.alpha))
        named.append((f.stem, s))
    rows, thresholds = compare(named, _config(args))
    _write_csv(args.out, COMPARE_COLUMNS, [r.as_csv() for r in rows])
    log.info("threshold policy tuned to offload<%g, alternative>%g", *thresholds)
    return 0


def _levels(text: str) -> list[float]:
    try:
        levels = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ScenarioError(f"bad --levels {text!r}") from None
    if not levels:
        raise ScenarioError("--levels is empty")
    return levels


def _params(args) -> scenarios.GeneratorParams:
    if not args.params:
        return scenarios.GeneratorParams()
    try:
        return scenarios.GeneratorParams.from_json(args.params)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{args.params}: {exc}") from None


def cmd_sweep(args) -> int:
    levels = _levels(args.levels)
    alpha = 1.0 if args.alpha is None else args.alpha
    spec = scenarios.SweepSpec(args.users, args.rats, args.seeds, args.seed, alpha, _params(args))
    out_rows, detail = [], []
    for level, batch in zip(levels, scenarios.load_sweep(spec, levels)):
        named = [(f"L{level:g}-s{spec.base_seed + k}", s) for k, s in enumerate(batch)]
        rows, _ = compare(named, _config(args))
        detail.extend(rows)
        out_rows.extend(aggregate(level, rows))
    _write_csv(args.out, SWEEP_COLUMNS, out_rows)
    if args.detail:
        _write_csv(args.detail, COMPARE_COLUMNS, [r.as_csv() for r in detail])
    return 0


def cmd_decentralized(args) -> int:
    scenario = _load(args)
    unit = _rate_unit(args, scenario)
    work = scenario.scaled(1.0 / unit) if unit != 1.0 else scenario
    rounds = args.rounds if args.rounds is not None else args.iters
    cfg = _config(args, max_iterations=rounds)
    state, trace = run_decentralized(work, cfg, keep_messages=bool(args.trace),
                                     assume_csi_at_rat=args.assume_csi_at_rat)
    if args.trace:
        trace.write_jsonl(args.trace)
    verified = None
    if args.verify:
        central = solve_dual(work, cfg)
        verified = bool(np.array_equal(central.lambdas, state.lambdas) and central.iteration == state.iteration)
        if not verified:
            raise VerifyMismatch("decentralized load indicators differ from the centralized run")
    rep = report_from_state(state, work, cfg, message_count=trace.message_count)
    out = _report_dict(rep, scenario, unit)
    out["protocol"] = summary(trace)
    out["verified"] = verified
    _write_json(args.out, out)
    return 0


def cmd_generate(args) -> int:
    params = _params(args)
    alpha = 1.0 if args.alpha is None else args.alpha
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        s = scenarios.generate(args.seed + k, args.users, args.rats, params, alpha)
        save_scenario(s, out / f"scenario_{args.seed + k:04d}.json")
    return 0


def cmd_bench(args) -> int:
    results, same = bench.run(args.instances, args.users, args.rats, args.iters, args.seed)
    print("backend,instances,iterations,seconds,ms_per_solve")
    for r in results:
        print(f"{r.backend},{r.instances},{r.iterations},{r.seconds:.4f},{r.per_solve_ms:.3f}")
    if len(results) > 1:
        by = {r.backend: r for r in results}
        if "cython" in by:
            print(f"# speedup cython vs python: {by['python'].seconds / by['cython'].seconds:.1f}x")
    print(f"# identical trajectories: {same}")
    return 0 if same else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agg", description="Alpha-fair multi-RAT traffic aggregation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="per-iteration CSV of the subgradient run")
    _solver_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="NUM vs single-RAT baselines on a directory of scenarios")
    p.add_argument("--scenario-dir", required=True)
    p.add_argument("--out", required=True)
    _solver_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="synthetic load sweep, aggregated per level and policy")
    p.add_argument("--levels", default="1,2,3")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--users", type=int, default=10, help="users at level 1")
    p.add_argument("--rats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", help="generator parameters (JSON)")
    p.add_argument("--out", required=True)
    p.add_argument("--detail", help="also write the per-scenario compare rows here")
    _solver_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decentralized", help="message-passing simulation of the solver")
    p.add_argument("--scenario", required=True)
    p.add_argument("--rounds", type=int, help="default: --iters")
    p.add_argument("--trace", help="JSON-lines message log")
    p.add_argument("--out", required=True)
    p.add_argument("--verify", action="store_true", help="check against the centralized run")
    p.add_argument("--assume-csi-at-rat", action="store_true",
                   help="RATs already know peak rates; reports carry no rate term")
    _solver_args(p)
    p.set_defaults(func=cmd_decentralized)

    p = sub.add_parser("generate", help="write synthetic scenario files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--rats", type=int, default=5)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--alpha", type=float)
    p.add_argument("--params")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="time the compiled and numpy kernels")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--users", type=int, default=20)
    p.add_argument("--rats", type=int, default=4)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    level = os.environ.get("AGG_LOG", "WARNING").upper()
    logging.basicConfig(level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VerifyMismatch as exc:
        return _fail(EXIT_VERIFY, exc)
    except (ScenarioError, OSError, ValueError) as exc:
        return _fail(EXIT_INPUT, exc)
    except (SolverError, RatAggError, FloatingPointError) as exc:
        return _fail(EXIT_SOLVER, exc)


if __name__ == "__main__":
    sys.exit(main())
