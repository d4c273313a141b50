"""Lindstedt hierarchy: cohomological solves, series routes, counterterms."""

import math

import numpy as np
import pytest

from torusrenorm.errors import ResonantFrequencyError
from torusrenorm.lindstedt import (
    LindstedtSeries,
    cohomological_bound_check,
    cohomological_residual,
    counterterm,
    hierarchy_residuals,
    lindstedt_terms,
    lindstedt_terms_tree,
    norm_growth_report,
    series_agreement,
    solve_cohomological,
)
from torusrenorm.symbols import FrequencyVector, TorusSymbol, random_symbol

COS_X = TorusSymbol.from_terms([((1,), (0,), 0.5), ((-1,), (0,), 0.5)])


def mixed_mode():
    # cos x cos(mu xi), the smallest genuinely phase-space perturbation
    return TorusSymbol.from_terms(
        [((s, ), (t, ), 0.25) for s in (1, -1) for t in (1, -1)]
    )


def test_cos_x_solves_to_sin_x():
    F, avg = solve_cohomological(COS_X, 1.0)
    sin_x = TorusSymbol.from_terms([((1,), (0,), -0.5j), ((-1,), (0,), 0.5j)])
    assert (F - sin_x).analytic_norm(0.0) < 1e-15
    assert avg.analytic_norm(0.0) == 0.0
    assert cohomological_residual(COS_X, 1.0) < 1e-15


def test_cos_x_series_truncates_at_first_order():
    # x-only symbols commute, so every order beyond the first vanishes.
    series = lindstedt_terms(COS_X, 1.0, 0.5, 4)
    for n, (H, Rp) in enumerate(series.orders, start=1):
        if n == 1:
            assert H.analytic_norm(0.0) == pytest.approx(1.0)
        else:
            assert H.analytic_norm(0.0) < 1e-14
        assert Rp.analytic_norm(0.0) < 1e-14


def test_x_independent_symbol_is_pure_counterterm():
    V = TorusSymbol.from_terms([((0,), (1,), 0.5), ((0,), (-1,), 0.5)])
    series = lindstedt_terms(V, 1.0, 0.3, 3)
    for H, _ in series.orders:
        assert H.analytic_norm(0.0) == 0.0
    assert (series.orders[0][1] - V).analytic_norm(0.0) == 0.0
    R = counterterm(series, 0.7)
    assert (R - V * 0.7).analytic_norm(0.0) < 1e-15


def test_mixed_mode_first_order():
    F, avg = solve_cohomological(mixed_mode(), 1.0)
    # sin x cos(mu xi)
    expect = TorusSymbol.from_terms(
        [((1,), (t,), -0.25j) for t in (1, -1)]
        + [((-1,), (t,), 0.25j) for t in (1, -1)]
    )
    assert (F - expect).analytic_norm(0.0) < 1e-15
    assert avg.analytic_norm(0.0) == 0.0


def test_resonant_mode_raises():
    V = TorusSymbol.from_terms(
        [((1, -1), (0, 0), 1.0)], d=2
    )
    with pytest.raises(ResonantFrequencyError):
        solve_cohomological(V, (1.0, 1.0))


def test_cohomological_bound_holds():
    rng = np.random.default_rng(31)
    freq = FrequencyVector(((1.0 + 5.0**0.5) / 2.0,), gamma_exp=1.0)
    for _ in range(10):
        V = random_symbol(rng, d=1, n_modes=6, k_max=3, m_max=3)
        lhs, rhs = cohomological_bound_check(V, freq, s=0.5, sigma=0.2)
        assert lhs <= rhs
    with pytest.raises(ValueError):
        cohomological_bound_check(COS_X, freq, s=0.5, sigma=0.5)


def test_recursive_matches_composition_sum():
    rng = np.random.default_rng(41)
    V = random_symbol(rng, d=1, n_modes=5, k_max=2, m_max=2)
    a = lindstedt_terms(V, 1.0, 0.5, 4, method="recursive")
    b = lindstedt_terms(V, 1.0, 0.5, 4, method="compositions")
    assert series_agreement(a, b) < 1e-12


def test_tree_route_matches_direct():
    series_d = lindstedt_terms(mixed_mode(), 1.0, 0.7, 3)
    series_t = lindstedt_terms_tree(mixed_mode(), 1.0, 0.7, 3)
    assert series_agreement(series_d, series_t) < 1e-11


def test_hierarchy_residuals_at_roundoff():
    rng = np.random.default_rng(43)
    V = random_symbol(rng, d=1, n_modes=5, k_max=2, m_max=2)
    for method in ("recursive", "compositions"):
        series = lindstedt_terms(V, 1.0, 0.5, 4, method=method)
        for r in hierarchy_residuals(V, series):
            assert r < 1e-12


def test_classical_series_is_quantum_limit():
    V = mixed_mode()
    classical = lindstedt_terms(V, 1.0, 0.0, 3)
    near = lindstedt_terms(V, 1.0, 1e-4, 3)
    far = lindstedt_terms(V, 1.0, 0.5, 3)
    assert series_agreement(classical, near) < 1e-8
    # the deviation is genuinely quadratic in hbar
    assert series_agreement(classical, far) > 1e-4


def test_counterterm_integrates_derivative():
    V = mixed_mode()
    series = lindstedt_terms(V, 1.0, 0.4, 4)
    t = 0.3
    nodes, weights = np.polynomial.legendre.leggauss(6)
    acc = TorusSymbol.zero(1)
    for u, w in zip(nodes, weights):
        tau = 0.5 * t * (u + 1.0)
        acc = acc + series.counterterm_derivative(tau) * (0.5 * t * w)
    assert (acc - counterterm(series, t)).analytic_norm(0.0) < 1e-14


def test_series_invariants_enforced():
    freq = FrequencyVector((1.0,))
    H_shifted = COS_X + TorusSymbol.from_terms([((0,), (0,), 1.0)])
    Rp_ok = TorusSymbol.from_terms([((0,), (1,), 1.0)])
    with pytest.raises(ValueError, match="x-average"):
        LindstedtSeries(((H_shifted, Rp_ok),), 0.5, freq, (0.0,), ({},))
    with pytest.raises(ValueError, match="depends on x"):
        LindstedtSeries(((COS_X, COS_X),), 0.5, freq, (0.0,), ({},))


def test_series_agreement_requires_same_orders():
    a = lindstedt_terms(COS_X, 1.0, 0.5, 2)
    b = lindstedt_terms(COS_X, 1.0, 0.5, 3)
    with pytest.raises(ValueError):
        series_agreement(a, b)


def test_norm_growth_report_shape():
    series = lindstedt_terms(mixed_mode(), 1.0, 0.5, 4)
    report = norm_growth_report(series, s0=0.5, sigma=0.25)
    assert report["s"] == 0.25
    assert len(report["rows"]) == 4
    assert report["bounded"]
    assert report["fitted_constant"] >= report["rows"][0]["h_norm_root"] * 0.0
    with pytest.raises(ValueError):
        norm_growth_report(series, s0=0.2, sigma=0.3)


def test_order_and_hbar_guards():
    with pytest.raises(ValueError):
        lindstedt_terms(COS_X, 1.0, 0.5, 0)
    with pytest.raises(ValueError):
        lindstedt_terms(COS_X, 1.0, 0.5, 7)
    with pytest.raises(ValueError):
        lindstedt_terms(COS_X, 1.0, -0.5, 2)
    with pytest.raises(ValueError):
        lindstedt_terms_tree(COS_X, 1.0, 0.5, 5)
    with pytest.raises(ValueError, match="dimension"):
        lindstedt_terms(COS_X, (1.0, 2.0), 0.5, 2)
