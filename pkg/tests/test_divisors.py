"""Small-divisor layer: resonances, admissible families, coefficient routes."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from torusrenorm.divisors import (
    MAX_SWEEP_NODES,
    DecoratedTree,
    GaussianRational,
    analytic_part_bound_check,
    eliasson_bound_check,
    enumerate_admissible,
    enumerate_resonances,
    equivalence_classes,
    maximal_covering_decomposition,
    omega1_class_sum,
    omega1_resonance_sum,
    omega_recursive,
    rho,
    sigma_jacobi_residual,
    sigma_multilinear,
    sigma_pair,
    sigma_tree,
    sigma_tree_bracket,
    tmap_injective,
    weight_pairing,
)
from torusrenorm.errors import NotDecomposableError, ResonantFrequencyError
from torusrenorm.symbols import FrequencyVector
from torusrenorm.trees import TreeIndexSet, enumerate_delta

GOLDEN = (1.0 + 5.0**0.5) / 2.0


def test_gaussian_rational_arithmetic():
    a = GaussianRational(Fraction(1, 2), Fraction(1, 3))
    b = GaussianRational(0, 1)
    assert a + b == GaussianRational(Fraction(1, 2), Fraction(4, 3))
    assert a * b == GaussianRational(Fraction(-1, 3), Fraction(1, 2))
    assert (a / a) == GaussianRational(1)
    assert complex(a) == 0.5 + (1.0 / 3.0) * 1j
    with pytest.raises(ZeroDivisionError):
        a / GaussianRational(0)


def test_gamma_prefix_sums_match_direct():
    rng = np.random.default_rng(7)
    for t in enumerate_delta(5):
        v = [tuple(int(x) for x in rng.integers(-3, 4, size=2)) for _ in range(5)]
        dt = DecoratedTree(t, v)
        for a in range(1, 6):
            lo, hi = t.subtree_interval(a)
            direct = tuple(
                sum(v[i - 1][j] for i in range(lo, hi + 1)) for j in range(2)
            )
            assert dt.gamma(a) == direct
        assert dt.total() == dt.gamma(t.root)


def test_chain_has_single_resonance():
    # delta (0,1,1) is the chain 3 -> 2 -> 1; only nodes {2,3} sum to zero.
    dt = DecoratedTree((0, 1, 1), [1, -1, 1])
    res = enumerate_resonances(dt)
    assert len(res) == 1
    r = res[0]
    assert r.apex == 3
    assert r.B == (1,)
    assert r.members() == (2, 3)
    assert r.support() == (2,)


def test_admissible_families_chain():
    dt = DecoratedTree((0, 1, 1), [1, -1, 1])
    fams = enumerate_admissible(dt)
    # The empty family fails: the plain weight of node 2's subtree is zero.
    # The one-resonance family repairs it, cutting the sum down to node 2
    # alone inside the members, which is -1 != 0.
    assert len(fams) == 1
    one = fams[0]
    assert len(one) == 1
    assert one.gammaJ[1] == (-1,)
    assert one.gammaJ[0] == dt.gamma(1)
    assert rho(dt) == 1


def test_resonance_scan_size_guard():
    n = MAX_SWEEP_NODES + 1
    dt = DecoratedTree((0,) + (1,) * (n - 1), [1] * n)
    with pytest.raises(ValueError, match="limited"):
        enumerate_resonances(dt)


def test_recursion_exact_oracle_matches_float():
    rng = np.random.default_rng(21)
    checked = 0
    for t in enumerate_delta(4):
        for _ in range(6):
            v = [int(x) for x in rng.integers(-2, 3, size=4)]
            dt = DecoratedTree(t, v)
            try:
                e1, e2 = omega_recursive(dt, 2.0, exact=True)
            except ResonantFrequencyError:
                continue
            f1, f2 = omega_recursive(dt, 2.0)
            assert abs(complex(e1) - f1) < 1e-12 * max(1.0, abs(f1))
            assert abs(complex(e2) - f2) < 1e-12 * max(1.0, abs(f2))
            checked += 1
    assert checked >= 10


def test_exact_mode_scalar_only():
    dt2 = DecoratedTree((0, 1), [(1, 0), (0, 1)])
    with pytest.raises(ValueError, match="d = 1"):
        omega_recursive(dt2, (1.0, GOLDEN), exact=True)
    with pytest.raises(ValueError, match="dimension"):
        omega_recursive(DecoratedTree((0, 1), [1, -1]), (1.0, 2.0))


def test_resonant_frequency_raises():
    # Node 1 alone has weight 1 and omega . 1 = 0 is impossible for omega=1,
    # but weight (1, -2) against omega=(2, 1) vanishes.
    dt = DecoratedTree((0, 1), [(1, -2), (0, 1)])
    with pytest.raises(ResonantFrequencyError):
        omega_recursive(dt, (2.0, 1.0))


def test_three_route_agreement_small():
    """Branch recursion, resonance sum, and class sum give one number."""
    rng = np.random.default_rng(5)
    cases = []
    for n in (1, 2, 3):
        for t in enumerate_delta(n):
            for v in itertools.product((-1, 0, 1), repeat=n):
                cases.append((t, v))
    for t in enumerate_delta(4):
        for _ in range(4):
            cases.append((t, tuple(int(x) for x in rng.integers(-2, 3, size=4))))
    checked = 0
    for t, v in cases:
        dt = DecoratedTree(t, v)
        try:
            o1, _ = omega_recursive(dt, GOLDEN)
        except ResonantFrequencyError:
            continue
        a = omega1_resonance_sum(dt, GOLDEN)
        b = omega1_class_sum(dt, GOLDEN)
        scale = max(1.0, abs(o1))
        assert abs(o1 - a) < 1e-9 * scale
        assert abs(o1 - b) < 1e-9 * scale
        checked += 1
    assert checked >= 80


def test_class_products_constant_and_tmap_injective():
    rng = np.random.default_rng(11)
    for t in enumerate_delta(5):
        v = [int(x) for x in rng.integers(-2, 3, size=5)]
        dt = DecoratedTree(t, v)
        # check_constancy=True raises if any family strays from its class rep.
        try:
            omega1_class_sum(dt, GOLDEN, check_constancy=True)
        except ResonantFrequencyError:
            continue
        assert tmap_injective(dt)
        for cls in equivalence_classes(dt):
            assert cls.kappa == max(len(f) for f in cls.families)
            rep = cls.representative.as_set()
            assert all(rep <= f.as_set() for f in cls.families)


def test_eliasson_bound_spot():
    freq = FrequencyVector((GOLDEN,), gamma_exp=1.0)
    dt = DecoratedTree((0, 1, 1), [1, -1, 1])
    lhs, rhs = eliasson_bound_check(dt, freq, K_max=6)
    assert 0.0 < lhs <= rhs


def test_covering_decomposition_chain():
    dt = DecoratedTree((0, 1, 1), [1, -1, 1])
    parts = maximal_covering_decomposition(dt, (2, 3))
    assert len(parts) == 1
    assert parts[0].members() == (2, 3)
    assert maximal_covering_decomposition(dt, ()) == []
    with pytest.raises(NotDecomposableError):
        maximal_covering_decomposition(dt, (1, 2))


def test_covering_decomposition_splits_nested_window():
    # Chain 5 -> ... -> 1.  {2,3}, {4,5} and their union are all resonance
    # member sets; the maximal decomposition must pick the two small blocks.
    dt = DecoratedTree((0, 1, 1, 1, 1), [1, -1, 1, 1, -1])
    res = enumerate_resonances(dt)
    assert sorted(r.members() for r in res) == [(2, 3), (2, 3, 4, 5), (4, 5)]
    parts = maximal_covering_decomposition(dt, (2, 3, 4, 5))
    assert sorted(p.members() for p in parts) == [(2, 3), (4, 5)]


def test_weight_pairing_antisymmetric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        w = (tuple(rng.integers(-4, 5, size=2)), tuple(rng.integers(-4, 5, size=2)))
        w1 = (tuple(rng.integers(-4, 5, size=2)), tuple(rng.integers(-4, 5, size=2)))
        assert weight_pairing(w, w1) == -weight_pairing(w1, w)
        assert weight_pairing(w, w) == 0.0


def test_sigma_pair_limits():
    w = ((2,), (1,))
    w1 = ((1,), (-1,))
    p = weight_pairing(w, w1)
    assert sigma_pair(w, w1, 0.0) == p
    # Odd function of the pairing, so the hbar correction is cubic.
    for h in (0.5, 0.1, 0.02):
        err = abs(sigma_pair(w, w1, h) - p)
        assert err < abs(p) ** 3 * h**2 / 24.0 + 1e-15
    assert sigma_pair(w, w1, 1.0) == -sigma_pair(w1, w, 1.0)
    with pytest.raises(ValueError):
        sigma_pair(w, w1, -0.5)


def test_sigma_multilinear_is_running_chain():
    rng = np.random.default_rng(9)
    for _ in range(10):
        ws = [
            (tuple(rng.integers(-3, 4, size=1)), tuple(rng.integers(-3, 4, size=1)))
            for _ in range(4)
        ]
        h = 0.7
        manual = sigma_pair(ws[0], ws[1], h)
        acc = (
            tuple(a + b for a, b in zip(ws[0][0], ws[1][0])),
            tuple(a + b for a, b in zip(ws[0][1], ws[1][1])),
        )
        manual *= sigma_pair(acc, ws[2], h)
        acc = (
            tuple(a + b for a, b in zip(acc[0], ws[2][0])),
            tuple(a + b for a, b in zip(acc[1], ws[2][1])),
        )
        manual *= sigma_pair(acc, ws[3], h)
        assert sigma_multilinear(ws[0], ws[1:], h) == pytest.approx(manual, abs=1e-14)


def test_sigma_tree_bracket_pair_anchor():
    # For n = 2 the bracket orientation reduces to the plain pair weight.
    chain2 = TreeIndexSet((0, 1))
    rng = np.random.default_rng(13)
    for h in (0.0, 0.3, 1.0):
        for _ in range(10):
            ws = [
                (tuple(rng.integers(-3, 4, size=2)), tuple(rng.integers(-3, 4, size=2)))
                for _ in range(2)
            ]
            got = sigma_tree_bracket(ws, chain2, h)
            assert got == pytest.approx(sigma_pair(ws[0], ws[1], h), abs=1e-14)


def test_sigma_tree_star_factorizes():
    # Root with two leaves: chain of both leaf weights, no branch factors.
    star = TreeIndexSet((0, 0, 2))
    ws = [((1,), (0,)), ((0,), (1,)), ((2,), (-1,))]
    h = 0.4
    expect = sigma_multilinear(ws[2], [ws[0], ws[1]], h)
    assert sigma_tree(ws, star, h) == pytest.approx(expect, abs=1e-14)


def test_sigma_jacobi_residual_zero():
    rng = np.random.default_rng(17)
    for h in (0.0, 0.25, 1.0):
        for _ in range(25):
            w1, w2, w3 = (
                (tuple(rng.integers(-3, 4, size=2)), tuple(rng.integers(-3, 4, size=2)))
                for _ in range(3)
            )
            assert sigma_jacobi_residual(w1, w2, w3, h) < 5e-13


def test_analytic_part_bound_sampled():
    dt = DecoratedTree((0, 1, 1), [1, -1, 1])
    assert analytic_part_bound_check(dt, s_decay=0.5, samples=100)
    with pytest.raises(ValueError):
        analytic_part_bound_check(dt, s_decay=0.0)
