import numpy as np
import pytest

from ratagg.model import Scenario, random_scenario

ALPHAS = (0.5, 1.0, 2.0)


def random_instances(seed, count, max_users=20, max_rats=4, alphas=ALPHAS, coverage_prob=1.0):
    """Seeded instances with U in 2..max_users, B in 2..max_rats, alpha cycling through ``alphas``."""
    rng = np.random.default_rng(seed)
    for k in range(count):
        U = int(rng.integers(2, max_users + 1))
        B = int(rng.integers(2, max_rats + 1))
        yield random_scenario(rng, U, B, alphas[k % len(alphas)], coverage_prob=coverage_prob)


@pytest.fixture
def lwa_2x2():
    return Scenario([[10.0, 5.0], [4.0, 8.0]], 1.0)
