import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratagg.errors import EmptyRat, NegativeAlpha, NonFinite, ZeroCoverageUser
from ratagg.model import Allocation, DualState, Scenario, assert_feasible, load_scenario, save_scenario, validate_scenario


def test_minimal_instance_accepted():
    s = validate_scenario(Scenario([[10.0]], 1.0))
    assert s.num_users == 1 and s.num_rats == 1


def test_zero_coverage_user():
    with pytest.raises(ZeroCoverageUser) as e:
        validate_scenario(Scenario([[0, 0], [4, 8]], 1.0))
    assert e.value.user == 0


def test_empty_rat():
    with pytest.raises(EmptyRat) as e:
        validate_scenario(Scenario([[10, 0], [4, 0]], 1.0))
    assert e.value.rat == 1


@pytest.mark.parametrize("c", [[[1.0, math.nan]], [[math.inf, 1.0]]])
def test_non_finite(c):
    with pytest.raises(NonFinite):
        validate_scenario(Scenario(c, 1.0))


def test_negative_alpha():
    with pytest.raises(NegativeAlpha):
        validate_scenario(Scenario([[1.0]], -0.5))


def test_arrays_are_read_only():
    s = Scenario([[1.0, 2.0]], 1.0)
    with pytest.raises(ValueError):
        s.peak_rates[0, 0] = 5.0
    a = Allocation.from_fractions([[1.0, 1.0]], s)
    with pytest.raises(ValueError):
        a.fractions[0, 0] = 0.0


rate = st.floats(min_value=0.0, max_value=1e9, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 4), st.data(), st.floats(0, 20))
def test_json_round_trip(U, B, data, alpha):
    c = np.array(data.draw(st.lists(st.lists(rate, min_size=B, max_size=B), min_size=U, max_size=U)))
    c[:, 0] = np.maximum(c[:, 0], 1.0)
    c[0] = np.maximum(c[0], 1.0)
    s = validate_scenario(Scenario(c, alpha, user_labels=[f"u{i}" for i in range(U)]))
    again = Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
    assert again == s


def test_file_round_trip(tmp_path):
    s = Scenario([[1.5, 0.0], [2.0, 3.0]], 2.0, rat_labels=["lte", "wlan"])
    save_scenario(s, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json") == s


def test_assert_feasible_catches_violations():
    s = Scenario([[10.0, 0.0], [4.0, 8.0]], 1.0)
    assert_feasible(Allocation.from_fractions([[0.5, 0.0], [0.5, 1.0]], s), s)
    with pytest.raises(AssertionError):
        assert_feasible(Allocation.from_fractions([[0.5, 0.0], [0.4, 1.0]], s), s)
    with pytest.raises(AssertionError):
        assert_feasible(Allocation.from_fractions([[0.5, 0.2], [0.5, 0.8]], s), s)
    idle = Allocation.from_fractions([[1.0, 0.0], [0.0, 0.0]], s)
    with pytest.raises(AssertionError):
        assert_feasible(idle, s)
    assert_feasible(idle, s, allow_idle=True)


def test_dual_state_defaults_best_to_current():
    st_ = DualState(np.array([1.0, 2.0]))
    assert np.array_equal(st_.best_lambdas, [1.0, 2.0])
    assert st_.best_objective == math.inf
