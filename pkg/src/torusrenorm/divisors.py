"""Decorated trees and the small-divisor coefficient calculus.

Trees carry integer lattice weights on their nodes; cumulative weights over
subtrees feed the divisors. Three independent routes compute the same
first-kind coefficient: the branch recursion, the sum over admissible
resonance families, and the sum over equivalence classes of families. Their
agreement is the backbone of the combinatorial test battery.

Node sets are bitmasks (node i is bit i-1). Subtrees are consecutive label
intervals, so containment and disjointness reduce to mask arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NotDecomposableError, ResonantFrequencyError
from .symbols import FrequencyVector
from .trees import TreeIndexSet, coefficient_c

MAX_SWEEP_NODES = 10


class GaussianRational:
    """Exact complex number with rational parts; the ground-truth arithmetic."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        other = _as_gq(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_gq(other)
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        other = _as_gq(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_gq(other)
        den = other.re * other.re + other.im * other.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        return GaussianRational(
            (self.re * other.re + self.im * other.im) / den,
            (self.im * other.re - self.re * other.im) / den,
        )

    def __eq__(self, other):
        other = _as_gq(other)
        return self.re == other.re and self.im == other.im

    def __complex__(self):
        return float(self.re) + 1j * float(self.im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"


def _as_gq(value):
    if isinstance(value, GaussianRational):
        return value
    return GaussianRational(value)


def _as_weight_tuple(entry, d):
    if np.isscalar(entry):
        if d != 1:
            raise ValueError("scalar decoration on a multi-dimensional tree")
        return (int(entry),)
    entry = tuple(int(x) for x in entry)
    if len(entry) != d:
        raise ValueError("decoration dimension mismatch")
    return entry


class DecoratedTree:
    """A tree index set with an integer weight vector on each node."""

    __slots__ = ("tree", "v", "d", "_pref", "_adm", "_classes")

    def __init__(self, tree, v, d: int | None = None):
        if not isinstance(tree, TreeIndexSet):
            tree = TreeIndexSet(tree)
        self.tree = tree
        v = list(v)
        if len(v) != tree.n:
            raise ValueError("one weight per node required")
        if d is None:
            d = 1 if np.isscalar(v[0]) else len(v[0])
        self.d = d
        self.v = tuple(_as_weight_tuple(entry, d) for entry in v)
        pref = np.zeros((tree.n + 1, d), dtype=np.int64)
        for i, w in enumerate(self.v, start=1):
            pref[i] = pref[i - 1] + np.asarray(w, dtype=np.int64)
        self._pref = pref
        self._adm = None
        self._classes = None

    @property
    def n(self) -> int:
        return self.tree.n

    def gamma(self, a: int):
        """Cumulative weight over the subtree below (and including) a."""
        lo, hi = self.tree.subtree_interval(a)
        return tuple(int(x) for x in self._pref[hi] - self._pref[lo - 1])

    def gamma_all(self):
        return tuple(self.gamma(a) for a in range(1, self.n + 1))

    def total(self):
        return tuple(int(x) for x in self._pref[self.n])

    def vsum_mask(self, mask: int):
        acc = np.zeros(self.d, dtype=np.int64)
        while mask:
            bit = mask & -mask
            acc += np.asarray(self.v[bit.bit_length() - 1], dtype=np.int64)
            mask ^= bit
        return tuple(int(x) for x in acc)

    def interval_mask(self, c: int) -> int:
        lo, hi = self.tree.subtree_interval(c)
        return ((1 << hi) - 1) ^ ((1 << (lo - 1)) - 1)

    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def __repr__(self):
        return f"DecoratedTree({self.tree.delta}, {self.v})"


@dataclass(frozen=True)
class Resonance:
    """An antichain below an apex whose removed-subtree complement sums to zero.

    The member set is the apex subtree minus the subtrees below the antichain
    nodes; the support is the union of open ancestor paths from the antichain
    to the apex.
    """

    apex: int
    B: tuple
    b_mask: int
    members_mask: int
    support_mask: int

    def members(self):
        return _mask_nodes(self.members_mask)

    def support(self):
        return _mask_nodes(self.support_mask)

    def __repr__(self):
        return f"Resonance(B={self.B}, apex={self.apex})"


def _mask_nodes(mask: int):
    out = []
    while mask:
        bit = mask & -mask
        out.append(bit.bit_length())
        mask ^= bit
    return tuple(out)


_candidate_cache: dict = {}


def _candidate_table(tree: TreeIndexSet):
    """All (antichain, apex) pairs of a tree, independent of decorations."""
    table = _candidate_cache.get(tree.delta)
    if table is not None:
        return table
    entries = []
    for apex in range(1, tree.n + 1):
        lo, hi = tree.subtree_interval(apex)
        below = [c for c in range(hi - 1, lo - 1, -1)]
        apex_interval = ((1 << hi) - 1) ^ ((1 << (lo - 1)) - 1)

        def extend(idx, chosen, covered):
            for pos in range(idx, len(below)):
                c = below[pos]
                if covered & (1 << (c - 1)):
                    continue
                cmask = _interval_mask_of(tree, c)
                new_chosen = chosen + [c]
                support = 0
                for b in new_chosen:
                    node = tree.parent[b]
                    while node != apex:
                        support |= 1 << (node - 1)
                        node = tree.parent[node]
                entries.append(
                    Resonance(
                        apex=apex,
                        B=tuple(sorted(new_chosen)),
                        b_mask=_nodes_mask(new_chosen),
                        members_mask=apex_interval & ~_covered_mask(tree, new_chosen),
                        support_mask=support,
                    )
                )
                extend(pos + 1, new_chosen, covered | cmask)

        extend(0, [], 0)
    entries.sort(key=lambda r: (r.apex, r.B))
    table = tuple(entries)
    if len(_candidate_cache) > 256:
        _candidate_cache.clear()
    _candidate_cache[tree.delta] = table
    return table


def _interval_mask_of(tree: TreeIndexSet, c: int) -> int:
    lo, hi = tree.subtree_interval(c)
    return ((1 << hi) - 1) ^ ((1 << (lo - 1)) - 1)


def _nodes_mask(nodes) -> int:
    mask = 0
    for c in nodes:
        mask |= 1 << (c - 1)
    return mask


def _covered_mask(tree: TreeIndexSet, nodes) -> int:
    mask = 0
    for c in nodes:
        mask |= _interval_mask_of(tree, c)
    return mask


def enumerate_resonances(dt: DecoratedTree):
    """All resonances of the decorated tree, sorted by (apex, antichain)."""
    if dt.n > MAX_SWEEP_NODES:
        raise ValueError(f"resonance scan limited to {MAX_SWEEP_NODES} nodes")
    zero = (0,) * dt.d
    return [r for r in _candidate_table(dt.tree) if dt.vsum_mask(r.members_mask) == zero]


def _compatible(r1: Resonance, r2: Resonance) -> bool:
    inter = r1.members_mask & r2.members_mask
    return inter == 0 or inter == r1.members_mask or inter == r2.members_mask


class AdmissibleFamily:
    """A non-overlapping resonance family whose modified weights never vanish."""

    __slots__ = ("resonances", "gammaJ", "key")

    def __init__(self, dt: DecoratedTree, resonances):
        res = sorted(resonances, key=lambda r: (_popcount(r.members_mask), r.apex, r.B))
        self.resonances = tuple(res)
        gammaJ = []
        for c in range(1, dt.n + 1):
            bit = 1 << (c - 1)
            owner = None
            for r in self.resonances:
                if r.support_mask & bit:
                    owner = r
                    break
            if owner is None:
                gammaJ.append(dt.gamma(c))
            else:
                # Weight of c's subtree with the owner's removed blocks cut out.
                gammaJ.append(dt.vsum_mask(dt.interval_mask(c) & owner.members_mask))
        self.gammaJ = tuple(gammaJ)
        self.key = tuple((r.apex, r.B) for r in self.resonances)

    def __len__(self):
        return len(self.resonances)

    def is_admissible(self, d: int) -> bool:
        zero = (0,) * d
        return all(g != zero for g in self.gammaJ)

    def as_set(self):
        return frozenset(self.resonances)

    def __repr__(self):
        return f"AdmissibleFamily({list(self.resonances)})"


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def enumerate_admissible(dt: DecoratedTree):
    """All admissible families, the empty family included when it qualifies.

    Families are cliques of the non-overlap relation on resonances; the
    no-vanishing condition is not monotone, so every clique is tested on
    its own.  The result is cached on the decorated tree.
    """
    if dt._adm is not None:
        return dt._adm
    res = enumerate_resonances(dt)
    families = []

    def extend(start, chosen):
        fam = AdmissibleFamily(dt, chosen)
        if fam.is_admissible(dt.d):
            families.append(fam)
        for i in range(start, len(res)):
            if all(_compatible(res[i], r) for r in chosen):
                extend(i + 1, chosen + [res[i]])

    extend(0, [])
    families.sort(key=lambda f: (len(f), f.key))
    dt._adm = families
    return families


def _omega_tuple(omega):
    if isinstance(omega, FrequencyVector):
        return omega.omega
    if np.isscalar(omega):
        return (float(omega),)
    return tuple(float(w) for w in omega)


def omega_recursive(dt: DecoratedTree, omega, exact: bool = False):
    """First- and second-kind coefficients by the branch recursion.

    In exact mode (d = 1, rational frequency) all arithmetic is done in
    Gaussian rationals, giving the ground-truth oracle for the float path.
    """
    om = _omega_tuple(omega)
    if len(om) != dt.d:
        raise ValueError("frequency dimension mismatch")
    if exact:
        if dt.d != 1:
            raise ValueError("exact mode requires d = 1")
        om_exact = tuple(Fraction(w).limit_denominator(10**12) for w in om)
        for we, wf in zip(om_exact, om):
            if float(we) != wf:
                raise ValueError("exact mode requires rational frequency entries")

    one = GaussianRational(1) if exact else 1.0 + 0.0j
    zero_val = GaussianRational(0) if exact else 0.0 + 0.0j
    zero_vec = (0,) * dt.d

    def divisor(sv):
        if exact:
            return sum(w * s for w, s in zip(om_exact, sv))
        return float(np.dot(om, sv))

    def inv_i(q):
        # 1 / (i q) = -i / q
        if exact:
            return GaussianRational(0, -Fraction(1) / q)
        return -1j / q

    memo1, memo2, memoR = {}, {}, {}

    def branches(mask):
        r = mask.bit_length()
        rest = mask & ~(1 << (r - 1))
        out = []
        while rest:
            top = rest.bit_length()
            bmask = dt.interval_mask(top) & rest
            out.append(bmask)
            rest &= ~bmask
        return r, out

    def antichains(pool_mask):
        """Nonempty antichains within the pool, each as its list of sub-blocks."""
        nodes = _mask_nodes(pool_mask)[::-1]
        result = []

        def pick(idx, picks, covered):
            for pos in range(idx, len(nodes)):
                c = nodes[pos]
                if covered & (1 << (c - 1)):
                    continue
                sub = dt.interval_mask(c) & pool_mask
                result.append(picks + [sub])
                pick(pos + 1, picks + [sub], covered | sub)

        pick(0, [], 0)
        return result

    def omega1(mask):
        if mask in memo1:
            return memo1[mask]
        sv = dt.vsum_mask(mask)
        if sv == zero_vec:
            memo1[mask] = zero_val
            return zero_val
        q = divisor(sv)
        if q == 0:
            raise ResonantFrequencyError(
                f"frequency annihilates the nonzero subtree weight {sv}"
            )
        _root, brs = branches(mask)
        prod = one
        for b in brs:
            prod = prod * omega1(b)
        value = inv_i(q) * (prod - omega_mixed(mask))
        memo1[mask] = value
        return value

    def omega2(mask):
        if mask in memo2:
            return memo2[mask]
        sv = dt.vsum_mask(mask)
        if sv != zero_vec:
            memo2[mask] = zero_val
            return zero_val
        if mask & (mask - 1) == 0:
            memo2[mask] = one
            return one
        _root, brs = branches(mask)
        prod = one
        for b in brs:
            prod = prod * omega1(b)
        value = prod - omega_mixed(mask)
        memo2[mask] = value
        return value

    def omega_mixed(mask):
        """Sum over root antichains: second kind on the quotient, first on blocks."""
        if mask in memoR:
            return memoR[mask]
        r = mask.bit_length()
        pool = mask & ~(1 << (r - 1))
        total = zero_val
        for blocks in antichains(pool):
            removed = 0
            term = one
            for sub in blocks:
                removed |= sub
                term = term * omega1(sub)
            term = term * omega2(mask & ~removed)
            total = total + term
        memoR[mask] = total
        return total

    full = dt.full_mask()
    return omega1(full), omega2(full)


def _inv_i_float(q: float) -> complex:
    return -1j / q


def omega1_resonance_sum(dt: DecoratedTree, omega) -> complex:
    """First-kind coefficient as the signed sum over admissible families."""
    om = _omega_tuple(omega)
    total = 0.0 + 0.0j
    for fam in enumerate_admissible(dt):
        term = (-1.0) ** len(fam)
        for g in fam.gammaJ:
            q = float(np.dot(om, g))
            if q == 0.0:
                raise ResonantFrequencyError(
                    f"frequency annihilates the nonzero modified weight {g}"
                )
            term = term * _inv_i_float(q)
        total += term
    return total


def _related(J1: frozenset, J2: frozenset) -> bool:
    """One-step equivalence: every extra resonance is sandwiched by the other family.

    Sandwiching means: same apex, member set strictly between two member
    sets of the other family, antichain strictly between the corresponding
    antichains (reversed inclusion).
    """

    def extras_covered(extras, witnesses):
        for q in extras:
            ok = False
            for ri, rk in itertools.permutations(witnesses, 2):
                if not (ri.apex == q.apex == rk.apex):
                    continue
                if (
                    ri.members_mask & q.members_mask == ri.members_mask
                    and q.members_mask & rk.members_mask == q.members_mask
                    and rk.b_mask & q.b_mask == rk.b_mask
                    and q.b_mask & ri.b_mask == q.b_mask
                ):
                    ok = True
                    break
            if not ok:
                return False
        return True

    return extras_covered(J2 - J1, J1) and extras_covered(J1 - J2, J2)


class EquivalenceClass:
    __slots__ = ("families", "kappa", "representative")

    def __init__(self, families, kappa, representative):
        self.families = families
        self.kappa = kappa
        self.representative = representative


def equivalence_classes(dt: DecoratedTree):
    """Partition admissible families, with per-class size caps and minimal reps.

    The pairwise relation is closed transitively; the minimal representative
    is the family contained in every member of its class.  Cached on the
    decorated tree.
    """
    if dt._classes is not None:
        return dt._classes
    fams = enumerate_admissible(dt)
    sets = [f.as_set() for f in fams]
    parent = list(range(len(fams)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    for i in range(len(fams)):
        for j in range(i + 1, len(fams)):
            if _related(sets[i], sets[j]):
                union(i, j)

    groups: dict = {}
    for i in range(len(fams)):
        groups.setdefault(find(i), []).append(i)

    classes = []
    for idxs in groups.values():
        members = [fams[i] for i in idxs]
        kappa = max(len(f) for f in members)
        rep = None
        for f in members:
            fs = f.as_set()
            if all(fs <= sets[i] for i in idxs):
                rep = f
                break
        if rep is None:
            # The intersection should itself be the class minimum.
            inter = sets[idxs[0]]
            for i in idxs[1:]:
                inter &= sets[i]
            for f in members:
                if f.as_set() == inter:
                    rep = f
                    break
        if rep is None:
            raise RuntimeError("equivalence class has no minimal representative")
        classes.append(EquivalenceClass(tuple(members), kappa, rep))
    classes.sort(key=lambda c: c.representative.key)
    dt._classes = classes
    return classes


def rho(dt: DecoratedTree) -> int:
    """Number of equivalence classes of admissible families."""
    return len(equivalence_classes(dt))


def omega1_class_sum(dt: DecoratedTree, omega, check_constancy: bool = True) -> complex:
    """First-kind coefficient as the signed sum over class representatives."""
    om = _omega_tuple(omega)

    def product(fam):
        term = 1.0 + 0.0j
        for g in fam.gammaJ:
            q = float(np.dot(om, g))
            if q == 0.0:
                raise ResonantFrequencyError(
                    f"frequency annihilates the nonzero modified weight {g}"
                )
            term *= _inv_i_float(q)
        return term

    total = 0.0 + 0.0j
    for cls in equivalence_classes(dt):
        value = product(cls.representative)
        if check_constancy:
            for fam in cls.families:
                other = product(fam)
                if abs(other - value) > 1e-9 * max(1.0, abs(value)):
                    raise RuntimeError(
                        "family product varies within an equivalence class"
                    )
        total += (-1.0) ** cls.kappa * value
    return total


def tmap(dt: DecoratedTree, family) -> tuple:
    """Alternating-layer triple of node masks for a family.

    Layers peel maximal member sets; the first component alternates union
    and difference over the layers, the second and third collect minimal
    and maximal member sets.
    """
    if isinstance(family, AdmissibleFamily):
        res = list(family.resonances)
    else:
        res = list(family)
    if not res:
        return (0, 0, 0)

    def strictly_contains(outer, inner):
        return outer != inner and inner & outer == inner

    remaining = list(res)
    layers = []
    while remaining:
        layer = [
            r
            for r in remaining
            if not any(
                strictly_contains(o.members_mask, r.members_mask) for o in remaining
            )
        ]
        layers.append(layer)
        remaining = [r for r in remaining if r not in layer]

    def union(layer):
        mask = 0
        for r in layer:
            mask |= r.members_mask
        return mask

    t_mask = union(layers[0])
    for i, layer in enumerate(layers[1:], start=1):
        if i % 2 == 1:
            t_mask &= ~union(layer)
        else:
            t_mask |= union(layer)

    minimal = [
        r
        for r in res
        if not any(strictly_contains(r.members_mask, o.members_mask) for o in res)
    ]
    return (t_mask, union(minimal), union(layers[0]))


def tmap_injective(dt: DecoratedTree) -> bool:
    """No two class representatives share a triple."""
    triples = [tmap(dt, cls.representative) for cls in equivalence_classes(dt)]
    return len(triples) == len(set(triples))


def eliasson_bound_check(dt: DecoratedTree, omega: FrequencyVector, K_max: int = 20):
    """Both sides of the black-box first-kind coefficient bound, as printed."""
    o1, _ = omega_recursive(dt, omega)
    lhs = abs(o1)
    g = omega.gamma_exp
    varsigma = omega.varsigma_or_estimate(K_max)
    weight_product = 1.0
    for w in dt.v:
        norm = float(np.linalg.norm(np.asarray(w, dtype=float)))
        if norm > 0:
            weight_product *= norm ** (3 * g)
    rhs = rho(dt) * (2.0 ** (4 * g + 3) * varsigma) ** dt.n * weight_product
    return lhs, rhs


def maximal_covering_decomposition(dt: DecoratedTree, nodes):
    """Partition a zero-sum node set into indecomposable resonance member sets.

    ``nodes`` may be an iterable of node labels or a bitmask. Raises
    :class:`NotDecomposableError` when no partition by resonances exists;
    a non-unique maximal partition would violate the underlying uniqueness
    claim and raises ``RuntimeError``.
    """
    if isinstance(nodes, int):
        target = nodes
    else:
        target = _nodes_mask(list(nodes))
    if target == 0:
        return []
    res = enumerate_resonances(dt)
    by_members = {r.members_mask: r for r in res}
    usable = [m for m in by_members if m & target == m]

    def partitions(mask):
        if mask == 0:
            yield []
            return
        low = mask & -mask
        for m in usable:
            if m & low and m & mask == m:
                for rest in partitions(mask & ~m):
                    yield [m] + rest

    decomposable_cache: dict = {}

    def splits_further(mask):
        """True when the member set breaks into two or more resonance parts."""
        if mask in decomposable_cache:
            return decomposable_cache[mask]
        out = False
        for parts in partitions(mask):
            if len(parts) >= 2:
                out = True
                break
        decomposable_cache[mask] = out
        return out

    maximal = []
    for parts in partitions(target):
        if all(not splits_further(m) for m in parts):
            maximal.append(tuple(sorted(parts)))
    maximal = sorted(set(maximal))
    if not maximal:
        raise NotDecomposableError(
            f"node set {sorted(_mask_nodes(target))} admits no resonance covering"
        )
    if len(maximal) > 1:
        raise RuntimeError("maximal covering decomposition is not unique")
    return [by_members[m] for m in maximal[0]]


# Fourier-weight layer: a weight is a (k, eta) pair of equal-length tuples.


def _weight(w):
    k, eta = w
    k = tuple(float(x) for x in (k if not np.isscalar(k) else (k,)))
    eta = tuple(float(x) for x in (eta if not np.isscalar(eta) else (eta,)))
    if len(k) != len(eta):
        raise ValueError("weight components differ in dimension")
    return k, eta


def weight_pairing(w, w1) -> float:
    """k . eta' - k' . eta, the phase-space pairing of two weights."""
    (k, eta), (k1, eta1) = _weight(w), _weight(w1)
    return float(np.dot(k, eta1) - np.dot(k1, eta))


def _weight_add(w, w1):
    (k, eta), (k1, eta1) = _weight(w), _weight(w1)
    return (
        tuple(a + b for a, b in zip(k, k1)),
        tuple(a + b for a, b in zip(eta, eta1)),
    )


def sigma_pair(w, w1, hbar: float) -> float:
    """(2/hbar) sin(hbar/2 pairing); the quantized antisymmetric pair weight.

    hbar = 0 selects the classical limit, the plain pairing.
    """
    if hbar < 0:
        raise ValueError("hbar must be nonnegative")
    if hbar == 0:
        return weight_pairing(w, w1)
    return (2.0 / hbar) * math.sin(0.5 * hbar * weight_pairing(w, w1))


def sigma_multilinear(w, args, hbar: float) -> float:
    """Chain of pair weights, each against the running sum of earlier arguments."""
    value = 1.0
    acc = _weight(w)
    for wi in args:
        value *= sigma_pair(acc, wi, hbar)
        acc = _weight_add(acc, wi)
    return value


def sigma_tree(ws, tree: TreeIndexSet, hbar: float) -> float:
    """Tree weight: the multilinear chain at the root times the branch weights.

    ``ws`` lists one weight per node, index 0 holding node 1. Branch sums
    enter the root chain in ascending block order.
    """
    if len(ws) != tree.n:
        raise ValueError("one weight per node required")
    blocks = tree.natural_decomposition()
    if not blocks:
        return 1.0
    root_w = ws[tree.root - 1]
    sums = []
    for c, (lo, hi) in blocks:
        acc = ws[lo - 1]
        for j in range(lo + 1, hi + 1):
            acc = _weight_add(acc, ws[j - 1])
        sums.append(acc)
    value = sigma_multilinear(root_w, sums, hbar)
    for c, (lo, hi) in blocks:
        sub = TreeIndexSet(tree.sub_delta(c))
        value *= sigma_tree(ws[lo - 1 : hi], sub, hbar)
    return value


def sigma_tree_bracket(ws, tree: TreeIndexSet, hbar: float) -> float:
    """Tree weight oriented as iterated brackets act on the root factor.

    Every pair factor swaps its arguments relative to :func:`sigma_tree`,
    so the two differ exactly by the parity of n - 1.
    """
    sign = -1.0 if (tree.n - 1) % 2 else 1.0
    return sign * sigma_tree(ws, tree, hbar)


def sigma_jacobi_residual(w1, w2, w3, hbar: float) -> float:
    """Residual of the three-term pair-weight identity used downstream."""
    lhs = sigma_pair(w1, _weight_add(w2, w3), hbar) * sigma_pair(w2, w3, hbar)
    rhs = sigma_pair(_weight_add(w1, w2), w3, hbar) * sigma_pair(w1, w2, hbar) + sigma_pair(
        w2, _weight_add(w1, w3), hbar
    ) * sigma_pair(w1, w3, hbar)
    return abs(lhs - rhs)


def analytic_part_bound_check(
    dt: DecoratedTree,
    s_decay: float,
    C: float = 8.0,
    hbar: float = 1.0,
    samples: int = 400,
    rng=None,
) -> bool:
    """Sampled maximization of the weighted tree factor against its bound."""
    if s_decay <= 0:
        raise ValueError("decay rate must be positive")
    n = dt.n
    rng = np.random.default_rng(0) if rng is None else rng
    tree = dt.tree
    best = 0.0
    for trial in range(samples):
        if trial == 0:
            ks = np.zeros((n, dt.d), dtype=int)
            es = np.zeros((n, dt.d), dtype=int)
        else:
            ks = rng.integers(-5, 6, size=(n, dt.d))
            es = rng.integers(-5, 6, size=(n, dt.d))
        ws = [(tuple(int(x) for x in ks[i]), tuple(int(x) for x in es[i])) for i in range(n)]
        weight_norms = np.sqrt((ks.astype(float) ** 2 + es.astype(float) ** 2).sum(axis=1))
        value = abs(sigma_tree(ws, tree, hbar)) * math.exp(-s_decay * weight_norms.sum())
        best = max(best, value)
    lhs = float(coefficient_c(tree)) * best
    if n == 1:
        rhs = 1.0
    else:
        m = n - 1
        rhs = C**m * (m**m / math.factorial(m)) ** 2 * (1.0 / (math.e * s_decay)) ** (2 * m)
    return lhs <= rhs
