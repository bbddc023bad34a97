import os
import subprocess
import sys

import numpy as np
import pytest

from cflplcr import kernels
from cflplcr._accel import NUMBA_ENABLED, backend


@pytest.mark.parametrize("seed", range(5))
def test_enum_twins_agree_bitwise(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 12))
    u = rng.uniform(0, 10, n)
    g = int(rng.integers(1, max(n, 1) + 1))
    nb, npf = kernels.TWINS["enum_phi"]
    assert np.array_equal(nb(u, 0.7, g), npf(u, 0.7, g))


@pytest.mark.parametrize("seed", range(5))
def test_lift_twins_agree_bitwise(seed):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(0, 14))
    pu = rng.integers(0, 5, q).astype(float)
    pa = rng.uniform(0.01, 0.3, q)
    k = int(rng.integers(1, q + 2))
    lam0 = np.sort(rng.uniform(0, 4, k))[::-1]
    nb, npf = kernels.TWINS["lift_dp"]
    assert np.array_equal(nb(pu, pa, 1.3, lam0), npf(pu, pa, 1.3, lam0))


def test_enum_objective_twins_agree():
    rng = np.random.default_rng(1)
    u = rng.uniform(0, 3, (4, 7))
    args = (u, np.full(4, 0.5), np.array([1, 2, 3, 7]), rng.uniform(1, 5, 4), rng.uniform(0, 1, 7))
    assert np.array_equal(kernels.enum_objective_nb(*args), kernels.enum_objective_np(*args))


def test_lift_dp_rejects_too_many_roots():
    with pytest.raises(ValueError):
        kernels.lift_dp(np.array([1.0]), np.array([0.1]), 1.0, np.zeros(3))


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CFLP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import cflplcr;print(cflplcr.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert backend() == ("numba" if NUMBA_ENABLED else "numpy")


def test_numpy_backend_end_to_end():
    code = ("from cflplcr import GenConfig, generate;from cflplcr.solver import solve;"
            "from cflplcr.oracle import brute_optimum;"
            "inst=generate(GenConfig(m=3,n=7,gamma=2,seed=4,coord_max=100.0,fixed_cost=30.0));"
            "r=solve(inst,'lsi');print(r.nu==brute_optimum(inst)[0] or abs(r.nu-brute_optimum(inst)[0])<1e-9)")
    env = dict(os.environ, CFLP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "True"
