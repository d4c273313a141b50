"""Lane equivalence: the compiled combine kernel against the numpy one."""

import os
import subprocess
import sys

import numpy as np
import pytest

from torusrenorm import kernels
from torusrenorm.symbols import random_symbol
from torusrenorm.weyl import _symbol_arrays


def _random_arrays(rng, d, n):
    a = random_symbol(rng, d=d, n_modes=n, k_max=4, m_max=4, real=False)
    return _symbol_arrays(a)


@pytest.mark.parametrize("mode", [kernels.MODE_PRODUCT, kernels.MODE_COMMUTATOR, kernels.MODE_POISSON])
@pytest.mark.parametrize("d", [1, 2])
def test_lanes_agree(mode, d):
    rng = np.random.default_rng(100 + mode + d)
    for _ in range(20):
        k1, m1, c1 = _random_arrays(rng, d, 7)
        k2, m2, c2 = _random_arrays(rng, d, 5)
        hbar = float(rng.uniform(0.05, 1.0))
        mu = float(rng.uniform(0.5, 2.0))
        Ka, Ma, Ca = kernels.combine(k1, m1, c1, k2, m2, c2, mu, hbar, mode)
        Kb, Mb, Cb = kernels.combine_pure(k1, m1, c1, k2, m2, c2, mu, hbar, mode)
        da = {(tuple(k), tuple(m)): c for k, m, c in zip(Ka.tolist(), Ma.tolist(), Ca)}
        db = {(tuple(k), tuple(m)): c for k, m, c in zip(Kb.tolist(), Mb.tolist(), Cb)}
        assert set(da) == set(db)
        for key in da:
            assert da[key] == pytest.approx(db[key], abs=1e-14, rel=1e-12)


def test_combine_rejects_nonpositive_hbar_for_quantized_modes():
    rng = np.random.default_rng(5)
    k, m, c = _random_arrays(rng, 1, 3)
    with pytest.raises(ValueError):
        kernels.combine(k, m, c, k, m, c, 1.0, 0.0, kernels.MODE_PRODUCT)
    # the Poisson mode has no hbar in its weight
    kernels.combine(k, m, c, k, m, c, 1.0, 0.0, kernels.MODE_POISSON)


def test_pure_env_forces_numpy_lane():
    env = dict(os.environ, TORUSRENORM_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from torusrenorm import kernels; print(kernels.backend_name())"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_backend_name_reports_available_lane():
    assert kernels.backend_name() in ("compiled", "numpy")
