"""Propagators, classical flows, spectra, measures, symbolic conjugation."""

import math
import warnings

import numpy as np
import pytest

from torusrenorm.dynamics import (
    classical_conjugation_residual,
    classical_flow,
    compose_with_flow,
    conjugation_residual,
    egorov_residual,
    propagate,
    renormalization_unitary,
    renormalized_matrix,
    semiclassical_measure,
    spectrum_check,
    symbolic_conjugation,
)
from torusrenorm.errors import ShellMatchError
from torusrenorm.lindstedt import lindstedt_terms
from torusrenorm.symbols import TorusSymbol
from torusrenorm.weyl import quantize, transport_matrix

COS_X = TorusSymbol.from_terms([((1,), (0,), 0.5), ((-1,), (0,), 0.5)])


def mixed_mode(scale=1.0):
    return TorusSymbol.from_terms(
        [((s,), (u,), 0.25 * scale) for s in (1, -1) for u in (1, -1)]
    )


def companion(scale=1.0):
    # cos x (1 + sin(mu xi)); xi dependence makes the generator time dependent
    return TorusSymbol.from_terms(
        [
            ((1,), (0,), 0.5 * scale),
            ((-1,), (0,), 0.5 * scale),
            ((1,), (1,), -0.25j * scale),
            ((1,), (-1,), 0.25j * scale),
            ((-1,), (1,), -0.25j * scale),
            ((-1,), (-1,), 0.25j * scale),
        ]
    )


def test_frozen_generator_steps_do_not_matter():
    one = propagate(COS_X, 1.0, 8, 0.7, steps=1).final()
    many = propagate(COS_X, 1.0, 8, 0.7, steps=37).final()
    assert np.linalg.norm(one.mat - many.mat) < 1e-12
    eye = np.eye(one.mat.shape[0])
    assert np.linalg.norm(one.mat.conj().T @ one.mat - eye) < 1e-12


def test_midpoint_is_second_order_for_time_dependent():
    # scaled copies of one symbol commute at all times and midpoint
    # quadrature is exact on linear schedules, so mix in a second symbol
    cos_xi = TorusSymbol.from_terms([((0,), (1,), 0.5), ((0,), (-1,), 0.5)])
    gen = lambda tau: COS_X + cos_xi * math.sin(1.7 * tau)
    ref = propagate(gen, 1.0, 6, 0.4, steps=512).final().mat
    errs, dts = [], []
    for steps in (8, 16, 32):
        U = propagate(gen, 1.0, 6, 0.4, steps=steps).final().mat
        errs.append(np.linalg.norm(U - ref))
        dts.append(0.4 / steps)
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert slope > 1.9


def test_propagate_guards():
    with pytest.raises(ValueError, match="backward"):
        propagate(COS_X, 1.0, 4, -0.1)
    lopsided = TorusSymbol.from_terms([((1,), (0,), 1.0)])  # not a real symbol
    with pytest.raises(ValueError, match="hermitian"):
        propagate(lopsided, 1.0, 4, 0.1, steps=1)


def test_adjoint_path_is_dagger():
    path = propagate(COS_X, 1.0, 5, 0.3, steps=4)
    adj = path.adjoint()
    assert np.allclose(adj.final().mat, path.final().mat.conj().T)
    assert path.control["steps"] == 4


def test_renormalization_unitary_identity_at_t0():
    series = lindstedt_terms(mixed_mode(), 1.0, 0.5, 2)
    U = renormalization_unitary(series, 0.5, 6, 0.0)
    assert np.allclose(U.mat, np.eye(13))


def test_conjugation_residual_trivial_cases():
    zero = TorusSymbol.zero(1)
    series0 = lindstedt_terms(zero, 1.0, 0.5, 2)
    assert conjugation_residual(zero, series0, 0.1, 0.5, 12) < 1e-13
    # x-independent V renormalizes by pure counterterm, the unitary is trivial
    Vxi = TorusSymbol.from_terms([((0,), (1,), 0.5), ((0,), (-1,), 0.5)])
    series_xi = lindstedt_terms(Vxi, 1.0, 0.5, 2)
    assert conjugation_residual(Vxi, series_xi, 0.1, 0.5, 12) < 1e-13
    # cos x conjugates exactly at every order
    series_c = lindstedt_terms(COS_X, 1.0, 0.5, 2)
    assert conjugation_residual(COS_X, series_c, 0.05, 0.5, 16) < 1e-10


def test_classical_flow_cos_x_closed_form():
    series = lindstedt_terms(COS_X, 1.0, 0.0, 2)
    t = 0.2
    flow = classical_flow(series, t)
    assert np.abs(flow.dx_values).max() < 1e-12
    xg = flow.x_axis[:, None, None]
    expect = -t * np.cos(xg)
    assert np.abs(flow.dxi_values[..., 0] - np.broadcast_to(expect[..., 0], flow.dxi_values[..., 0].shape)).max() < 1e-10
    assert flow.symplectic_residual < 1e-9
    assert flow.displacement_sup() == pytest.approx(t, abs=1e-10)
    assert classical_conjugation_residual(COS_X, series, t, flow=flow) < 1e-10


def test_compose_with_flow_identity_at_t0():
    series = lindstedt_terms(mixed_mode(), 1.0, 0.0, 2)
    flow = classical_flow(series, 0.0)
    a = mixed_mode(0.7)
    back = compose_with_flow(a, flow)
    assert (back - a).analytic_norm(0.0) < 1e-10


def test_egorov_exact_for_x_only_generator():
    series = lindstedt_terms(COS_X, 1.0, 0.5, 2)
    # x-only symbols quantize to commuting convolution matrices and the
    # flow never moves x, so both sides agree to projection accuracy.
    assert egorov_residual(COS_X, series, 0.1, 0.5, 16) < 1e-10


def test_egorov_residual_shrinks_with_hbar():
    V = companion(0.4)
    a = COS_X
    resids, hbars = [], (0.4, 0.2, 0.1)
    for h in hbars:
        series = lindstedt_terms(V, 1.0, h, 2)
        resids.append(egorov_residual(a, series, 0.05, h, 16))
    slope = np.polyfit(np.log(hbars), np.log(resids), 1)[0]
    assert slope > 0.8


def test_spectrum_matches_transport_for_zero_v():
    zero = TorusSymbol.zero(1)
    series = lindstedt_terms(zero, 1.0, 0.5, 2)
    eigs, frac = spectrum_check(zero, series, 0.1, 0.5, 10)
    assert frac == 1.0
    assert len(eigs) == 21
    modes = np.arange(-10, 11)
    assert np.allclose(np.sort(eigs), np.sort(0.5 * modes.astype(float)))


def test_spectrum_check_rejects_complex_symbol():
    lopsided = TorusSymbol.from_terms([((1,), (0,), 1.0)])
    series = lindstedt_terms(lopsided, 1.0, 0.5, 1)
    with pytest.raises(ValueError, match="hermitian"):
        spectrum_check(lopsided, series, 0.1, 0.5, 8)


def test_measure_pairings_exact_at_t0():
    V = mixed_mode(0.1)
    series = lindstedt_terms(V, 1.0, 0.25, 2)
    tests = [COS_X, TorusSymbol.from_terms([((0,), (1,), 0.5), ((0,), (-1,), 0.5)])]
    est = semiclassical_measure(V, series, 0.0, tests, [0.25], J=8, shell=1.0)
    assert est.sup_deviation() < 1e-12
    rec = est.records[0]
    assert rec["mode"] == (4,)
    assert rec["eigenvalue"] == pytest.approx(1.0)


def test_measure_shell_out_of_reach():
    V = mixed_mode(0.1)
    series = lindstedt_terms(V, 1.0, 0.01, 2)
    with pytest.raises(ShellMatchError):
        semiclassical_measure(V, series, 0.0, [COS_X], [0.01], J=4, shell=1.0)


def test_symbolic_conjugation_limits():
    series = lindstedt_terms(mixed_mode(), 1.0, 0.5, 3)
    a = COS_X
    assert (symbolic_conjugation(a, series, 0.0) - a).analytic_norm(0.0) == 0.0
    with pytest.raises(ValueError, match="truncated"):
        symbolic_conjugation(a, series, 0.1, N=4)
    # first order in t is the commutator with the first generator term
    from torusrenorm.weyl import moyal_commutator

    t = 1e-3
    fd = (symbolic_conjugation(a, series, t) - a) * (1.0 / t)
    lead = moyal_commutator(series.orders[0][0], a, 0.5)
    assert (fd - lead).analytic_norm(0.0) < 1e-2


def test_symbolic_conjugation_tracks_matrix_conjugation():
    V = companion(0.5)
    hbar, J = 0.5, 16
    series = lindstedt_terms(V, 1.0, hbar, 2)
    a = COS_X

    def gap(t):
        U = renormalization_unitary(series, hbar, J, t)
        lhs = U.dagger() @ quantize(a, hbar, J) @ U
        rhs = quantize(symbolic_conjugation(a, series, t, hbar), hbar, J)
        return float(np.linalg.norm((lhs - rhs).restricted(9), 2))

    g1, g2 = gap(0.08), gap(0.04)
    assert g1 < 5e-3
    assert g1 / g2 > 4.0  # cubic truncation error halves thrice


def test_symbolic_conjugation_doubling_paths():
    series = lindstedt_terms(mixed_mode(0.05), 1.0, 0.5, 2)
    a = mixed_mode(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = symbolic_conjugation(a, series, 0.05, s=0.6, sigma=0.3)
    assert out.analytic_norm(0.3) <= 2.0 * a.analytic_norm(0.6)
    big = lindstedt_terms(mixed_mode(4.0), 1.0, 0.5, 2)
    with pytest.warns(RuntimeWarning, match="smallness"):
        symbolic_conjugation(a, big, 1.5, s=0.6, sigma=0.3)


def test_renormalized_matrix_assembly():
    V = mixed_mode(0.2)
    series = lindstedt_terms(V, 1.0, 0.5, 2)
    A = renormalized_matrix(V, series, 0.3, 0.5, 6)
    from torusrenorm.lindstedt import counterterm

    pert = V * 0.3 - counterterm(series, 0.3)
    B = transport_matrix((1.0,), 0.5, 6) + quantize(pert, 0.5, 6)
    assert np.allclose(A.mat, B.mat)
