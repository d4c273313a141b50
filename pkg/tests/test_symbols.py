"""Lattice symbol container, norms, serialization, frequency arithmetic."""

import json
import math

import numpy as np
import pytest

from torusrenorm.errors import ResonantFrequencyError
from torusrenorm.symbols import (
    AffineSymbol,
    FrequencyVector,
    TorusSymbol,
    diophantine_estimate,
    elementary_sup,
    random_symbol,
)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def test_coefficients_and_algebra():
    a = TorusSymbol.from_terms([((1,), (0,), 1.0), ((0,), (2,), 2.0j)])
    b = TorusSymbol.from_terms([((1,), (0,), 0.5)])
    s = a + b - b
    assert s.coeff((1,), (0,)) == 1.0
    assert (a * 2.0).coeff((0,), (2,)) == 4.0j
    assert (-a).coeff((1,), (0,)) == -1.0
    assert len(TorusSymbol.zero(1)) == 0
    assert not TorusSymbol.zero(1)


def test_analytic_norm_weights():
    # one x-mode at distance 1, one xi-mode at distance mu * 2
    a = TorusSymbol.from_terms([((1,), (0,), 1.0), ((0,), (2,), 1.0)])
    s = 0.3
    expected = math.exp(s) + math.exp(s * a.mu * 2)
    assert a.analytic_norm(s) == pytest.approx(expected, rel=1e-15)
    assert a.analytic_norm(0.0) == pytest.approx(2.0)


def test_mu_depends_on_period():
    a = TorusSymbol.zero(1, L=2 * math.pi)
    b = TorusSymbol.zero(1, L=math.pi)
    assert a.mu == pytest.approx(1.0)
    assert b.mu == pytest.approx(2.0)


def test_evaluate_matches_direct_sum():
    rng = np.random.default_rng(7)
    a = random_symbol(rng, n_modes=6, real=False)
    x = rng.uniform(0, 2 * math.pi, size=5)
    xi = rng.uniform(-2, 2, size=5)
    direct = np.zeros(5, dtype=complex)
    for (k, m), c in a.items():
        direct += c * np.exp(1j * (k[0] * x + a.mu * m[0] * xi))
    assert np.allclose(a.evaluate(x, xi), direct, atol=1e-14)


def test_real_symbol_evaluates_real():
    rng = np.random.default_rng(8)
    a = random_symbol(rng, n_modes=6, real=True)
    assert a.is_real()
    vals = a.evaluate(np.linspace(0, 6, 9), np.linspace(-1, 1, 9))
    assert np.max(np.abs(np.imag(vals))) < 1e-13


def test_x_average_keeps_only_zero_x_modes():
    a = TorusSymbol.from_terms([((1,), (0,), 1.0), ((0,), (3,), 2.0), ((0,), (0,), 4.0)])
    avg = a.x_average()
    assert avg.coeff((0,), (3,)) == 2.0
    assert avg.coeff((0,), (0,)) == 4.0
    assert avg.coeff((1,), (0,)) == 0.0


def test_json_round_trip_and_duplicate_rejection(tmp_path):
    rng = np.random.default_rng(9)
    a = random_symbol(rng, d=2, n_modes=5, real=False)
    path = tmp_path / "sym.json"
    a.save_json(path)
    b = TorusSymbol.load_json(path)
    assert (a - b).analytic_norm(0.0) == 0.0

    payload = a.to_json_dict()
    payload["coeffs"].append(dict(payload["coeffs"][0]))
    with pytest.raises(ValueError, match="duplicate"):
        TorusSymbol.from_json_dict(payload)


def test_json_rejects_false_reality_claim():
    payload = {
        "d": 1,
        "L": 2 * math.pi,
        "real": True,
        "coeffs": [{"k": [1], "m": [0], "re": 1.0, "im": 0.0}],
    }
    with pytest.raises(ValueError, match="real"):
        TorusSymbol.from_json_dict(payload)


def test_support_caps_cut_and_record_tail():
    a = TorusSymbol(1, 2 * math.pi, {((5,), (0,)): 1.0, ((1,), (0,)): 2.0}, k_cap=3)
    assert a.coeff((5,), (0,)) == 0.0
    assert a.coeff((1,), (0,)) == 2.0
    assert a.tail_norm == pytest.approx(1.0)


def test_frequency_vector_dot_and_estimate():
    om = FrequencyVector((1.0, GOLDEN))
    assert om.dot((2, -1)) == pytest.approx(2 - GOLDEN)
    assert om.varsigma_or_estimate(10) > 0
    pinned = FrequencyVector((1.0,), varsigma=0.25)
    assert pinned.varsigma_or_estimate(100) == 0.25


def test_diophantine_estimate_golden_mean():
    # best rational approximations of the golden mean are Fibonacci ratios,
    # so the estimate stays bounded away from zero as the box grows
    e10 = diophantine_estimate((1.0, GOLDEN), 1.0, 10)
    e25 = diophantine_estimate((1.0, GOLDEN), 1.0, 25)
    assert 0 < e25 <= e10
    assert e25 > 0.2


def test_diophantine_estimate_detects_exact_resonance():
    with pytest.raises(ResonantFrequencyError):
        diophantine_estimate((1.0, 0.5), 1.0, 4)


def test_elementary_sup_closed_form():
    m, s = 3.0, 0.7
    ts = np.linspace(0, 60, 400000)
    grid_max = np.max(ts**m * np.exp(-ts * s))
    assert elementary_sup(m, s) == pytest.approx(grid_max, rel=1e-6)
    assert elementary_sup(0.0, 1.0) == 1.0


def test_affine_symbol_dimension_check():
    om = FrequencyVector((1.0,))
    with pytest.raises(ValueError):
        AffineSymbol(om, TorusSymbol.zero(2))
    assert AffineSymbol(om).periodic.d == 1
