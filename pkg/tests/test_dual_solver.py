import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratagg import _backend
from ratagg.baselines import greedy_association
from ratagg.dual_solver import (
    SolverConfig,
    associate,
    dual_objective,
    dual_offset,
    polish,
    solve_dual,
    step,
    subgradient,
    subgradient_gap_bound,
    write_trace_csv,
)
from ratagg.errors import AlphaZeroUnsupported
from ratagg.model import DualState, Scenario, random_scenario
from ratagg.oracle import primal_projected_gradient
from ratagg.utility import network_utility

from conftest import random_instances


def test_dual_objective_examples():
    s = Scenario([[math.e]], 1.0)
    assert dual_objective([1.0], s) == pytest.approx(2.0, abs=1e-15)
    s2 = Scenario([[4.0]], 2.0)
    # lam + 1/(rho-1) * (c/lam)^(rho-1) with rho = 1/2
    assert dual_objective([1.0], s2) == pytest.approx(1.0 - 2.0 * 0.5)


def test_alpha_zero_rejected():
    with pytest.raises(AlphaZeroUnsupported):
        dual_objective([1.0], Scenario([[1.0]], 0.0))
    with pytest.raises(AlphaZeroUnsupported):
        solve_dual(Scenario([[1.0]], 0.0))


@pytest.mark.parametrize("U,c", [(1, 7.0), (3, 5.0)])
def test_single_rat_optimum_is_user_count(U, c):
    s = Scenario([[c]] * U, 1.0)
    grid = np.linspace(0.5, 5.0, 4501)
    vals = [dual_objective([g], s) for g in grid]
    assert grid[int(np.argmin(vals))] == pytest.approx(U, abs=1e-3)
    st_ = solve_dual(s, SolverConfig(max_iterations=5000, initial_lambda=0.5))
    assert st_.best_lambdas[0] == pytest.approx(U, abs=1e-2)


def test_associate_examples():
    s = Scenario([[10.0, 5.0], [4.0, 8.0]], 1.0)
    a = associate([1.0, 1.0], s)
    assert a.best_sets == (frozenset({0}), frozenset({1}))
    assert a.splitters == []
    tie = associate([2.0, 1.0], s)
    assert tie.best_sets[0] == frozenset({0, 1})
    # representative is the lowest tied index
    assert tie.rat_users[0] == (0,)
    uncovered = Scenario([[0.0, 5.0], [4.0, 8.0]], 1.0)
    assert associate([100.0, 1e6], uncovered).best_sets[0] == frozenset({1})


def test_subgradient_examples():
    s = Scenario([[10.0, 5.0], [4.0, 8.0]], 1.0)
    a = associate([1.0, 1.0], s)
    assert np.allclose(subgradient([1.0, 1.0], s, a), [0.0, 0.0])
    s2 = Scenario([[4.0]], 2.0)
    assert subgradient([0.25], s2, associate([0.25], s2))[0] == pytest.approx(0.0, abs=1e-15)
    assert subgradient([1.0], s2, associate([1.0], s2))[0] == pytest.approx(0.5)


def test_step_examples():
    s = Scenario([[5.0]], 1.0)
    cfg = SolverConfig(step_schedule="const", epsilon0=0.5)
    nxt = step(DualState(np.array([2.0])), cfg, s)
    assert nxt.lambdas[0] == pytest.approx(1.75, abs=1e-15)
    assert nxt.iteration == 1
    fixed = step(DualState(np.array([1.0])), cfg, s)
    assert fixed.lambdas[0] == 1.0
    big = SolverConfig(step_schedule="const", epsilon0=100.0)
    clamped = step(DualState(np.array([0.5])), big, Scenario([[5.0], [5.0], [5.0]], 1.0))
    assert clamped.lambdas[0] > 0
    low = step(DualState(np.array([2.0])), big, Scenario([[5.0]], 1.0))
    assert low.lambdas[0] == SolverConfig().lambda_floor


def test_step_schedules():
    assert SolverConfig(step_schedule="const", epsilon0=0.3).step_size(10) == 0.3
    assert SolverConfig(step_schedule="harmonic").step_size(4) == 0.25
    assert SolverConfig(step_schedule="sqrt").step_size(4) == 0.5
    with pytest.raises(ValueError):
        SolverConfig(step_schedule="adam")


def test_solve_dual_deterministic():
    s = random_scenario(np.random.default_rng(3), 8, 3, 1.0)
    a, b = solve_dual(s), solve_dual(s)
    assert np.array_equal(a.lambdas, b.lambdas) and a.best_objective == b.best_objective


@pytest.mark.parametrize("backend", sorted(_backend.BACKENDS))
def test_best_objective_is_running_minimum(backend):
    s = random_scenario(np.random.default_rng(4), 10, 3, 2.0)
    st_ = solve_dual(s, SolverConfig(max_iterations=500, record_lambdas=True), backend=backend)
    obj = st_.history.objective
    assert st_.best_objective <= obj.min()
    assert dual_objective(st_.best_lambdas, s) == st_.best_objective
    assert np.all(np.diff(np.minimum.accumulate(obj)) <= 0)


def test_subgradient_gap_bound_examples():
    assert subgradient_gap_bound([1.0, 1.0], [2.0], [1.0], 1.0) == pytest.approx(0.75)
    assert subgradient_gap_bound([0.5], [1.0, 1.0], [1.0, 1.0], 2.0) == pytest.approx(1.0)


def test_subgradient_gap_bound_holds():
    for s in random_instances(11, 20, max_users=8, max_rats=3):
        st_ = solve_dual(s, SolverConfig(max_iterations=300))
        pol = polish(st_.best_lambdas, s)
        h = st_.history
        bound = subgradient_gap_bound(h.steps, h.initial_lambdas, pol.lambdas, h.subgrad_norm.max())
        assert st_.best_objective - dual_objective(pol.lambdas, s) <= bound + 1e-9


def test_polish_reaches_stationarity():
    for s in random_instances(12, 30, max_users=12):
        pol = polish(solve_dual(s, SolverConfig(max_iterations=2000)).best_lambdas, s)
        assert pol.converged
        assert np.allclose(pol.fractions.sum(axis=0), 1.0, atol=1e-9)
        assert pol.dual_violation <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 2.0]))
def test_weak_duality(seed, alpha):
    rng = np.random.default_rng(seed)
    s = random_scenario(rng, int(rng.integers(2, 8)), int(rng.integers(1, 4)), alpha)
    lam = rng.uniform(0.05, 10.0, s.num_rats)
    feasible = network_utility(greedy_association(s), alpha)
    assert dual_objective(lam, s) - dual_offset(s) >= feasible - 1e-9 * max(1.0, abs(feasible))


def test_dual_optimum_matches_oracle():
    for s in random_instances(13, 9, max_users=10):
        pol = polish(solve_dual(s).best_lambdas, s)
        opt = network_utility(primal_projected_gradient(s), s.alpha)
        assert dual_objective(pol.lambdas, s) - dual_offset(s) == pytest.approx(opt, rel=1e-9, abs=1e-9)


def test_kernels_agree_bitwise():
    if len(_backend.BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    for s in random_instances(14, 15):
        cfg = SolverConfig(max_iterations=400, record_lambdas=True)
        a = solve_dual(s, cfg, backend="cython")
        b = solve_dual(s, cfg, backend="python")
        assert np.array_equal(a.history.lambdas, b.history.lambdas)
        assert np.array_equal(a.history.objective, b.history.objective)
        assert a.best_objective == b.best_objective and a.iteration == b.iteration


def test_trace_csv(tmp_path):
    s = Scenario([[10.0, 5.0], [4.0, 8.0]], 1.0)
    with pytest.raises(ValueError):
        write_trace_csv(solve_dual(s, SolverConfig(max_iterations=5)), tmp_path / "t.csv")
    st_ = solve_dual(s, SolverConfig(max_iterations=5, record_lambdas=True, initial_lambda=3.0))
    write_trace_csv(st_, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,lambda_0,lambda_1,F,subgrad_norm"
    assert len(lines) == 1 + len(st_.history.steps)


def test_associate_single_user_examples():
    s = Scenario([[10.0, 5.0]], 1.0)
    assert associate([1.0, 1.0], s).best_sets[0] == frozenset({0})
    assert associate([2.0, 1.0], s).best_sets[0] == frozenset({0, 1})
    s0 = Scenario([[10.0, 0.0]], 1.0)
    assert associate([1.0, 1e-12], s0).best_sets[0] == frozenset({0})


def test_subgradient_vanishes_at_user_count():
    s = Scenario([[7.0]], 1.0)
    assert subgradient([1.0], s, associate([1.0], s))[0] == 0.0
    s3 = Scenario([[7.0]] * 3, 1.0)
    assert subgradient([3.0], s3, associate([3.0], s3))[0] == pytest.approx(0.0, abs=1e-15)


def test_clamp_from_floor():
    cfg = SolverConfig(step_schedule="const", epsilon0=1.0)
    # nobody picks RAT 1, so its indicator drifts down by a full step
    out = step(DualState(np.array([1e-12, 1e-12])), cfg, Scenario([[5.0, 0.0], [5.0, 1.0]], 1.0))
    assert out.lambdas[1] == cfg.lambda_floor and out.lambdas[0] > 1.0


def test_bound_constant_steps_from_optimum():
    eps, N, G = 0.1, 50, 3.0
    assert subgradient_gap_bound([eps] * N, [1.0], [1.0], G) == pytest.approx(G * G * eps / 2)


def test_bound_shrinks_with_harmonic_steps():
    s = Scenario([[7.0]], 1.0)
    bounds = []
    for n in (10, 100, 1000, 10000):
        st_ = solve_dual(s, SolverConfig(max_iterations=n, step_schedule="harmonic", initial_lambda=3.0,
                                         stop_tolerance=1e-300))
        h = st_.history
        bounds.append(subgradient_gap_bound(h.steps, h.initial_lambdas, [1.0], h.subgrad_norm.max()))
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    assert bounds[-1] < 0.25


def test_two_by_two_instance_against_oracle():
    s = Scenario([[10.0, 5.0], [4.0, 8.0]], 1.0)
    st_ = solve_dual(s)
    f_star = network_utility(primal_projected_gradient(s), 1.0) + dual_offset(s)
    h = st_.history
    bound = subgradient_gap_bound(h.steps, h.initial_lambdas, polish(st_.best_lambdas, s).lambdas, h.subgrad_norm.max())
    assert 0.0 <= st_.best_objective - f_star + 1e-12 <= bound + 1e-12
    assert st_.best_objective - f_star < 1e-6
