"""Rooted planar trees encoded by children-count sequences.

A tree on nodes 1..n is stored as the sequence delta of children counts,
constrained so that the partial order it induces is compatible with the
labels: every predecessor of a node has a smaller label, and the nodes
strictly between a predecessor and its successor are predecessors too.
Consequences used throughout: the subtree below any node is a consecutive
label interval ending at that node, and the sequence is reconstructed by a
single stack pass.

Coefficients attached to trees are exact rationals; float arithmetic would
mask failures of the identities tested downstream.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

MAX_NODES = 12


def is_valid_delta(delta) -> bool:
    """Membership test: sum n-1 with all proper suffix sums covering their tail."""
    n = len(delta)
    if n == 0 or any(d < 0 for d in delta):
        return False
    if sum(delta) != n - 1:
        return False
    ssum = 0
    for j in range(n, 1, -1):
        ssum += delta[j - 1]
        if ssum < n - j + 1:
            return False
    return True


class TreeIndexSet:
    """A children-count sequence together with its parent/children maps.

    Children lists are stored right-to-left in plane order, which for this
    encoding means descending label. Nodes are 1-based.
    """

    __slots__ = ("delta", "n", "parent", "children", "_sizes", "_depths")

    def __init__(self, delta):
        delta = tuple(int(d) for d in delta)
        if not is_valid_delta(delta):
            raise ValueError(f"{delta} is not a valid children-count sequence")
        self.delta = delta
        self.n = len(delta)
        parent = [0] * (self.n + 1)
        children = [()] * (self.n + 1)
        stack = []
        for i in range(1, self.n + 1):
            take = delta[i - 1]
            if take > len(stack):
                raise ValueError(f"{delta} pops an empty stack at node {i}")
            picked = stack[len(stack) - take :]
            del stack[len(stack) - take :]
            for c in picked:
                parent[c] = i
            children[i] = tuple(sorted(picked, reverse=True))
            stack.append(i)
        if stack != [self.n]:
            raise ValueError(f"{delta} does not assemble into a single tree")
        self.parent = tuple(parent)
        self.children = tuple(children)
        self._sizes = None
        self._depths = None

    @property
    def root(self) -> int:
        return self.n

    def subtree_size(self, c: int) -> int:
        if self._sizes is None:
            sizes = [0] * (self.n + 1)
            for i in range(1, self.n + 1):
                sizes[i] = 1 + sum(sizes[ch] for ch in self.children[i])
            self._sizes = tuple(sizes)
        return self._sizes[c]

    def subtree_interval(self, c: int):
        """The label interval [start, c] of the subtree below (and including) c."""
        return c - self.subtree_size(c) + 1, c

    def subtree_nodes(self, c: int):
        lo, hi = self.subtree_interval(c)
        return range(lo, hi + 1)

    def depth(self, c: int) -> int:
        if self._depths is None:
            depths = [0] * (self.n + 1)
            for i in range(self.n - 1, 0, -1):
                depths[i] = depths[self.parent[i]] + 1
            self._depths = tuple(depths)
        return self._depths[c]

    def diameter(self) -> int:
        return max(self.depth(c) for c in range(1, self.n + 1))

    def ancestors(self, c: int):
        """Strict ancestors of c, nearest first."""
        out = []
        while c != self.root:
            c = self.parent[c]
            out.append(c)
        return out

    def natural_decomposition(self):
        """Root subtree blocks in ascending label order.

        Returns a list of (child, (lo, hi)) pairs; the first block is the
        innermost slot of the nested-commutator reading.
        """
        blocks = [(c, self.subtree_interval(c)) for c in self.children[self.root]]
        blocks.sort(key=lambda item: item[1][0])
        return blocks

    def sub_delta(self, c: int):
        """The children-count sequence of the subtree below c."""
        lo, hi = self.subtree_interval(c)
        return self.delta[lo - 1 : hi]

    def level_vectors(self):
        """Children counts per depth, nodes right-to-left (descending label)."""
        by_depth = {}
        for c in range(self.n, 0, -1):
            by_depth.setdefault(self.depth(c), []).append(self.delta[c - 1])
        return [tuple(by_depth[l]) for l in range(max(by_depth) + 1)]

    def __eq__(self, other):
        return isinstance(other, TreeIndexSet) and self.delta == other.delta

    def __hash__(self):
        return hash(self.delta)

    def __repr__(self):
        return f"TreeIndexSet({self.delta})"


def tree_order(delta) -> TreeIndexSet:
    return TreeIndexSet(delta)


def enumerate_delta(n: int):
    """All valid children-count sequences on n nodes, lexicographic order.

    Count equals the (n-1)-th Catalan number; the 4^n bound is loose.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_NODES:
        raise ValueError(f"n = {n} exceeds the desk-scale limit {MAX_NODES}")
    if n == 1:
        return [TreeIndexSet((0,))]
    results = []

    # Choose entries from the root downward so the suffix constraint prunes.
    # chosen holds delta_n, delta_{n-1}, ..., delta_{pos+1}.
    def descend(pos: int, ssum: int, chosen):
        if pos == 1:
            if ssum == n - 1:
                results.append(TreeIndexSet((0, *reversed(chosen))))
            return
        lo = max(0, (n - pos + 1) - ssum)
        for dp in range(lo, n - 1 - ssum + 1):
            descend(pos - 1, ssum + dp, chosen + [dp])

    descend(n, 0, [])
    results.sort(key=lambda t: t.delta)
    return results


def enumerate_delta_bruteforce(n: int):
    """Filter the full candidate grid; oracle for the incremental generator."""
    if n > 8:
        raise ValueError("brute force is for cross-checks at small n")
    out = []
    for delta in itertools.product(range(n), repeat=n):
        if is_valid_delta(delta):
            out.append(delta)
    return out


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    if n == 0:
        return 1
    return catalan(n - 1) * 2 * (2 * n - 1) // (n + 1)


def composition_coefficient(ks) -> Fraction:
    """Product of reciprocal prefix sums of a positive composition."""
    ks = tuple(int(k) for k in ks)
    if not ks or any(k <= 0 for k in ks):
        raise ValueError("composition entries must be positive")
    value = Fraction(1)
    total = 0
    for k in ks:
        total += k
        value /= total
    return value


def permutation_sum_check(ks) -> bool:
    """Summing the coefficient over all orderings telescopes to the product."""
    ks = tuple(int(k) for k in ks)
    if len(ks) > 8:
        raise ValueError("permutation sum limited to 8 parts")
    total = sum(composition_coefficient(p) for p in itertools.permutations(ks))
    target = Fraction(1)
    for k in ks:
        target /= k
    return total == target


def jacobi_coefficient_check(l1: int, ls0) -> bool:
    """Exact splitting of a coefficient when one part moves inside or merges."""
    ls0 = tuple(int(k) for k in ls0)
    l1 = int(l1)
    lhs = composition_coefficient(ls0) / l1
    merged = ls0[:-1] + (ls0[-1] + l1,)
    rhs = composition_coefficient(ls0 + (l1,)) + composition_coefficient(merged) / l1
    return lhs == rhs


def coefficient_c(tree: TreeIndexSet) -> Fraction:
    """Tree coefficient by root decomposition, innermost block first."""
    blocks = tree.natural_decomposition()
    if not blocks:
        return Fraction(1)
    sizes = [hi - lo + 1 for _, (lo, hi) in blocks]
    value = composition_coefficient(sizes)
    for c, _ in blocks:
        value *= coefficient_c(TreeIndexSet(tree.sub_delta(c)))
    return value


def connect(t1: TreeIndexSet, t2: TreeIndexSet, iota: int) -> TreeIndexSet:
    """Graft t1 as a new rightmost child inside t2.

    Position 0 grafts below the root of t2; position i >= 1 grafts below the
    root of the i-th ascending block of t2's natural decomposition. The new
    subtree occupies the labels immediately before its parent, making it the
    rightmost (largest-label) child.
    """
    blocks = t2.natural_decomposition()
    if not 0 <= iota <= len(blocks):
        raise ValueError(f"graft position {iota} out of range 0..{len(blocks)}")
    v = t2.root if iota == 0 else blocks[iota - 1][0]
    n1 = t1.n
    out = []
    for label in range(1, t1.n + t2.n + 1):
        if label < v:
            out.append(t2.delta[label - 1])
        elif label < v + n1:
            out.append(t1.delta[label - v])
        else:
            old = label - n1
            out.append(t2.delta[old - 1] + (1 if old == v else 0))
    return TreeIndexSet(out)


def diameter(tree: TreeIndexSet) -> int:
    return tree.diameter()


def level_vectors(tree: TreeIndexSet):
    return tree.level_vectors()


def level_count_identity(tree: TreeIndexSet) -> bool:
    """Nodes at depth l+1 are exactly the children counted at depth l."""
    levels = tree.level_vectors()
    for l in range(len(levels) - 1):
        if sum(levels[l]) != len(levels[l + 1]):
            return False
    return sum(levels[-1]) == 0
