import numpy as np
import pytest

from ratagg.errors import TooLarge
from ratagg.model import Scenario, assert_feasible
from ratagg.oracle import exhaustive_grid, grid_granularity, primal_projected_gradient, project_simplex
from ratagg.pipeline import solve
from ratagg.utility import network_utility

from conftest import random_instances


def _bisection_projection(v):
    # reference: find theta with sum(max(v - theta, 0)) == 1
    lo, hi = v.min() - 1.0, v.max()
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.maximum(v - mid, 0).sum() > 1:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - (lo + hi) / 2, 0)


def test_projection_matches_reference():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        v = rng.normal(size=(n, 3)) * rng.uniform(0.1, 10)
        p = project_simplex(v)
        ref = np.column_stack([_bisection_projection(v[:, j]) for j in range(3)])
        assert np.abs(p - ref).max() <= 1e-12
        assert np.allclose(p.sum(axis=0), 1.0) and (p >= 0).all()


def test_grid_examples():
    assert np.array_equal(exhaustive_grid(Scenario([[10.0]], 1.0), 10).fractions, [[1.0]])
    # two identical users on one RAT split it evenly
    g = exhaustive_grid(Scenario([[5.0], [5.0]], 1.0), 10)
    assert np.allclose(g.fractions, [[0.5], [0.5]])
    with pytest.raises(TooLarge):
        exhaustive_grid(Scenario(np.ones((4, 2)), 1.0), 10)
    with pytest.raises(ValueError):
        exhaustive_grid(Scenario([[1.0]], 1.0), 5)


def test_grid_brackets_projected_gradient():
    for s in random_instances(31, 15, max_users=3, max_rats=2):
        pg = primal_projected_gradient(s)
        assert_feasible(pg, s, tol=1e-9)
        grid = exhaustive_grid(s, 40)
        u_pg, u_grid = network_utility(pg, s.alpha), network_utility(grid, s.alpha)
        assert u_grid <= u_pg + 1e-9 * abs(u_pg)
        assert u_pg - u_grid <= grid_granularity(s, pg, 40) + 1e-9


def test_uncovered_entries_stay_zero():
    s = Scenario([[10.0, 0.0], [4.0, 8.0]], 1.0)
    pg = primal_projected_gradient(s)
    assert pg.fractions[0, 1] == 0.0
    assert pg.fractions[1, 1] == pytest.approx(1.0)


def test_oracle_examples():
    assert np.array_equal(primal_projected_gradient(Scenario([[3.0]], 1.0)).fractions, [[1.0]])
    sym = primal_projected_gradient(Scenario([[5.0]] * 3, 1.0))
    assert np.abs(sym.fractions - 1 / 3).max() <= 1e-6


def test_oracle_agrees_with_pipeline_on_two_by_two():
    s = Scenario([[10.0, 5.0], [4.0, 8.0]], 1.0)
    opt = network_utility(primal_projected_gradient(s), 1.0)
    assert solve(s).primal_utility == pytest.approx(opt, rel=1e-3)


def test_grid_resolution_examples():
    g = exhaustive_grid(Scenario([[5.0], [5.0]], 1.0), 100)
    assert np.allclose(g.fractions, [[0.5], [0.5]])
    rng = np.random.default_rng(32)
    for _ in range(10):
        s = Scenario(rng.uniform(10, 100, size=(2, 2)), 1.0)
        pg = network_utility(primal_projected_gradient(s), 1.0)
        grid = network_utility(exhaustive_grid(s, 50), 1.0)
        assert 0.0 <= pg - grid <= 2 / 50
