from fractions import Fraction

import numpy as np
import pytest

from cflplcr import GenConfig, from_rows, generate

# three-facility customer used throughout: utilities 5, 4, 3 and outside option 10
EX_U = [5.0, 4.0, 3.0]
EX_U0 = 10.0


def ex_view(gamma):
    return from_rows([EX_U], EX_U0, gamma).views[0]


def small_instance(seed, n, m, gamma):
    """Instances with a nontrivial optimum at desk scale: tight square, moderate fixed cost."""
    rng = np.random.default_rng(seed)
    cost = float(rng.uniform(5.0, 120.0))
    return generate(GenConfig(m=m, n=n, gamma=gamma, seed=seed, coord_max=100.0, fixed_cost=cost))


def random_view(rng, n, gamma=None, scale=10.0):
    u = rng.uniform(0.0, scale, n)
    if rng.random() < 0.3 and n > 1:
        u[rng.integers(n)] = u[rng.integers(n)]  # exercise ties
    g = int(rng.integers(1, n + 1)) if gamma is None else gamma
    return from_rows([u], float(rng.uniform(0.5, 5.0)), g).views[0]


def all_sets(n):
    return [tuple(j for j in range(n) if (k >> j) & 1) for k in range(1 << n)]


@pytest.fixture
def ex1():
    return ex_view(1)


@pytest.fixture
def ex2():
    return ex_view(2)


def frac(a, b):
    return float(Fraction(a, b))
