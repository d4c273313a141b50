"""Tree index sets and the exact-rational coefficient layer."""

from fractions import Fraction

import numpy as np
import pytest

from torusrenorm.trees import (
    TreeIndexSet,
    catalan,
    coefficient_c,
    composition_coefficient,
    connect,
    diameter,
    enumerate_delta,
    enumerate_delta_bruteforce,
    is_valid_delta,
    jacobi_coefficient_check,
    level_count_identity,
    level_vectors,
    permutation_sum_check,
    tree_order,
)


def test_validity_suffix_sum_rule():
    assert is_valid_delta((0,))
    assert is_valid_delta((0, 1))
    assert is_valid_delta((0, 0, 2))
    assert not is_valid_delta((1,))
    assert not is_valid_delta((0, 2))
    assert not is_valid_delta((0, 1, 0))  # two roots


def test_enumeration_matches_bruteforce():
    for n in range(1, 7):
        fast = {t.delta for t in enumerate_delta(n)}
        slow = set(enumerate_delta_bruteforce(n))
        assert fast == slow
        assert len(fast) == catalan(n - 1)


def test_parent_children_structure():
    t = TreeIndexSet((0, 0, 2, 1))
    assert t.root == 4
    assert t.parent[3] == 4
    assert t.children[3] == (2, 1)  # descending label order
    assert t.subtree_interval(3) == (1, 3)
    assert list(t.subtree_nodes(3)) == [1, 2, 3]


def test_depth_and_diameter():
    chain = TreeIndexSet((0, 1, 1, 1))
    star = TreeIndexSet((0, 0, 0, 3))
    assert chain.diameter() == 3
    assert star.diameter() == 1
    assert diameter(chain) == 3


def test_composition_coefficient_values():
    # prefix-sum products: c_{(k)} = 1/k, and the n = 2 split checked by hand
    assert composition_coefficient((3,)) == Fraction(1, 3)
    assert composition_coefficient((1, 2)) == Fraction(1, 1) * Fraction(1, 3)
    assert composition_coefficient((2, 1)) == Fraction(1, 2) * Fraction(1, 3)


def test_permutation_sum_identity_small():
    for comp in [(1,), (2,), (1, 1), (2, 1), (1, 2), (1, 1, 1), (3, 1, 2)]:
        assert permutation_sum_check(comp)


def test_jacobi_coefficient_identity_random():
    rng = np.random.default_rng(31)
    for _ in range(50):
        l1 = int(rng.integers(1, 6))
        ls0 = tuple(int(x) for x in rng.integers(1, 6, size=int(rng.integers(1, 4))))
        assert jacobi_coefficient_check(l1, ls0)


def test_coefficient_c_chain_and_star():
    # chain: blocks enter one at a time, so plain prefix weights
    chain = TreeIndexSet((0, 1, 1))
    assert coefficient_c(chain) == Fraction(1, 1) * Fraction(1, 2) * Fraction(1, 1) * Fraction(1, 1)
    star = TreeIndexSet((0, 0, 2))
    # two singleton blocks in ascending order: 1/(1) * 1/(1+1)
    assert coefficient_c(star) == Fraction(1, 2)


def test_connect_grafts_rightmost_child():
    t1 = TreeIndexSet((0, 1))
    t2 = TreeIndexSet((0,))
    joined = connect(t1, t2, 0)  # below the root of a singleton
    assert joined.delta == (0, 1, 1)
    with pytest.raises(ValueError):
        connect(t1, t2, 5)


def test_connect_order_additivity_and_validity():
    rng = np.random.default_rng(32)
    trees4 = enumerate_delta(4)
    trees3 = enumerate_delta(3)
    valid7 = {t.delta for t in enumerate_delta(7)}
    for _ in range(10):
        a = trees4[rng.integers(len(trees4))]
        b = trees3[rng.integers(len(trees3))]
        iota = int(rng.integers(0, len(b.natural_decomposition()) + 1))
        joined = connect(a, b, iota)
        assert joined.n == a.n + b.n
        assert joined.delta in valid7


def test_level_vectors_and_count_identity():
    t = tree_order((0, 0, 2, 1))
    levels = level_vectors(t)
    assert levels[0] == (1,)  # root has one child
    assert sum(sum(level) for level in levels) == t.n - 1
    for tree in enumerate_delta(5):
        assert level_count_identity(tree)
