"""Order-by-order solution of the conjugation hierarchy.

Two independent builders produce the same series of generator terms and
counterterm derivative coefficients: a direct recursion that peels nested
scaled commutators, and a tree expansion driven by the small-divisor
coefficients.  Their agreement is the engine's main cross-check, so the
two routes deliberately share no intermediate code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .divisors import DecoratedTree, omega_recursive, sigma_tree_bracket
from .errors import ResonantFrequencyError
from .symbols import FrequencyVector, TorusSymbol, elementary_sup
from .trees import coefficient_c, composition_coefficient, enumerate_delta
from .weyl import directional_x_derivative, moyal_commutator

MAX_DIRECT_ORDER = 6
MAX_TREE_ORDER = 4

DEFAULT_S_GRID = (0.0, 0.25, 0.5)


def _freq(omega, d: int) -> FrequencyVector:
    if isinstance(omega, FrequencyVector):
        freq = omega
    else:
        freq = FrequencyVector(omega)
    if freq.d != d:
        raise ValueError(f"frequency has dimension {freq.d}, symbol has {d}")
    return freq


def solve_cohomological(V: TorusSymbol, omega) -> tuple[TorusSymbol, TorusSymbol]:
    """Invert the transport derivative on the mean-free part of V.

    Returns ``(F, avg)`` where ``avg`` is the x-average of V and F carries
    coefficient V(k,m)/(i omega.k) on every mode with k != 0.  F is
    normalized to zero x-average.
    """
    freq = _freq(omega, V.d)
    avg = V.x_average()
    data = {}
    for (k, m), c in V.items():
        if not any(k):
            continue
        div = freq.dot(k)
        if div == 0.0:
            raise ResonantFrequencyError(f"omega.k vanishes exactly at k={k}")
        data[(k, m)] = c / (1j * div)
    return V._wrap(data, tail=V.tail_norm), avg


def cohomological_residual(V: TorusSymbol, omega) -> float:
    """s=0 norm of omega.grad_x F - (V - avg); zero on the lattice."""
    freq = _freq(omega, V.d)
    F, avg = solve_cohomological(V, freq)
    lhs = directional_x_derivative(freq.omega, F)
    return (lhs - (V - avg)).analytic_norm(0.0)


def cohomological_bound_check(
    V: TorusSymbol, omega, s: float, sigma: float, K_max: int | None = None
) -> tuple[float, float]:
    """Solution-loss inequality: returns (norm of F at s - sigma, bound).

    The bound is varsigma^{-1} (gamma/(e sigma))^gamma times the norm of V
    at s, with varsigma taken from the frequency or estimated on the
    support box of V.
    """
    if not 0 < sigma < s:
        raise ValueError("need 0 < sigma < s")
    freq = _freq(omega, V.d)
    F, _ = solve_cohomological(V, freq)
    if K_max is None:
        K_max = max(1, V.support_k())
    varsigma = freq.varsigma_or_estimate(K_max)
    rhs = elementary_sup(freq.gamma_exp, sigma) * V.analytic_norm(s) / varsigma
    return F.analytic_norm(s - sigma), rhs


@dataclass(frozen=True)
class LindstedtSeries:
    """Truncated generator/counterterm series in the expansion parameter.

    ``orders[n-1]`` holds the pair (H_n, Rp_n); the generator is
    sum t^{n-1} H_n and the counterterm derivative sum t^{n-1} Rp_n.
    ``norms`` tabulates analytic norms of each pair on ``s_grid``.
    """

    orders: tuple
    hbar: float
    omega: FrequencyVector
    s_grid: tuple
    norms: tuple

    def __post_init__(self):
        for n, (H, Rp) in enumerate(self.orders, start=1):
            if any(any(k) for (k, _), _ in Rp.items()):
                raise ValueError(f"counterterm coefficient {n} depends on x")
            if H.x_average().analytic_norm(0.0) > 1e-12 * max(1.0, H.analytic_norm(0.0)):
                raise ValueError(f"generator term {n} has nonzero x-average")

    @property
    def order_count(self) -> int:
        return len(self.orders)

    def generator(self, t: float) -> TorusSymbol:
        """H(t) summed to the stored truncation order."""
        total = TorusSymbol.zero(self.omega.d, self.orders[0][0].L if self.orders else 2 * math.pi)
        for n, (H, _) in enumerate(self.orders, start=1):
            total = total + H * (t ** (n - 1))
        return total

    def counterterm_derivative(self, t: float) -> TorusSymbol:
        total = TorusSymbol.zero(self.omega.d, self.orders[0][0].L if self.orders else 2 * math.pi)
        for n, (_, Rp) in enumerate(self.orders, start=1):
            total = total + Rp * (t ** (n - 1))
        return total


def _series(pairs, hbar: float, freq: FrequencyVector, s_grid) -> LindstedtSeries:
    s_grid = tuple(float(s) for s in s_grid)
    norms = tuple(
        {s: (H.analytic_norm(s), Rp.analytic_norm(s)) for s in s_grid} for H, Rp in pairs
    )
    return LindstedtSeries(tuple(pairs), float(hbar), freq, s_grid, norms)


def _psi_inverse(hs, a, q, hbar, cache):
    """Composition-weighted nested commutators of total order q applied to a.

    Evaluated by the equivalent averaged recursion: (1/q) times the sum of
    [H_{q-j}, psi_j(a)] over j < q, with psi_0 the identity.
    """
    if q == 0:
        return a
    if q in cache:
        return cache[q]
    total = None
    for j in range(q):
        term = moyal_commutator(hs[q - j - 1], _psi_inverse(hs, a, j, hbar, cache), hbar)
        total = term if total is None else total + term
    out = total * (1.0 / q)
    cache[q] = out
    return out


def _compositions(total: int):
    """Ordered tuples of positive integers summing to total."""
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def _psi_inverse_compositions(hs, a, q, hbar, cache):
    """Same map as :func:`_psi_inverse`, summed literally over compositions.

    Exponentially slower; kept as an internal oracle for the recursion.
    """
    if q == 0:
        return a
    if q in cache:
        return cache[q]
    total = None
    for comp in _compositions(q):
        sym = a
        for k in comp:
            sym = moyal_commutator(hs[k - 1], sym, hbar)
        sym = sym * float(composition_coefficient(comp))
        total = sym if total is None else total + sym
    cache[q] = total
    return total


def lindstedt_terms(
    V: TorusSymbol,
    omega,
    hbar: float,
    N: int,
    *,
    s_grid=DEFAULT_S_GRID,
    method: str = "recursive",
) -> LindstedtSeries:
    """Generator and counterterm coefficients by the direct hierarchy.

    Order n collects the nested-commutator action of lower-order generator
    terms on the mean-free perturbation and on earlier counterterm
    coefficients, then splits off the x-average as Rp_n and inverts the
    transport derivative for H_n.  ``method`` selects the averaged
    recursion (default) or the literal composition sum.  hbar = 0 runs the
    classical hierarchy (Poisson brackets throughout).
    """
    if N < 1:
        raise ValueError("need at least one order")
    if N > MAX_DIRECT_ORDER:
        raise ValueError(f"direct recursion capped at order {MAX_DIRECT_ORDER}")
    if hbar < 0:
        raise ValueError("hbar must be nonnegative")
    freq = _freq(omega, V.d)
    apply_psi = {"recursive": _psi_inverse, "compositions": _psi_inverse_compositions}[method]

    H1, R1 = solve_cohomological(V, freq)
    hs = [H1]
    rps = [R1]
    mean_free = V - R1
    cache_v: dict = {}
    cache_r: dict = {}
    for n in range(2, N + 1):
        rhs = apply_psi(hs, mean_free, n - 1, hbar, cache_v)
        for m in range(2, n):
            rhs = rhs - apply_psi(hs, rps[m - 1], n - m, hbar, cache_r.setdefault(m, {}))
        Hn, Rn = solve_cohomological(rhs, freq)
        hs.append(Hn)
        rps.append(Rn)
    return _series(list(zip(hs, rps)), hbar, freq, s_grid)


def lindstedt_terms_tree(
    V: TorusSymbol,
    omega,
    hbar: float,
    N: int,
    *,
    s_grid=DEFAULT_S_GRID,
) -> LindstedtSeries:
    """The same series, summed over decorated trees.

    Each order-n term sums over tree shapes and over assignments of V's
    modes to the n nodes: the rational tree coefficient, the product of
    mode coefficients, the bracket-oriented quantized weight, and the
    small-divisor coefficient of the decorated tree.  The divided route
    feeds H_n, the zero-sum route feeds Rp_n.
    """
    if N < 1:
        raise ValueError("need at least one order")
    if N > MAX_TREE_ORDER:
        raise ValueError(f"tree expansion capped at order {MAX_TREE_ORDER}")
    if hbar < 0:
        raise ValueError("hbar must be nonnegative")
    freq = _freq(omega, V.d)
    modes = [((k, m), c) for (k, m), c in V.items()]
    mu = V.mu
    pairs = []
    for n in range(1, N + 1):
        h_data: dict = {}
        r_data: dict = {}
        omega_cache: dict = {}
        for tree in enumerate_delta(n):
            c_tree = float(coefficient_c(tree))
            for chosen in product(modes, repeat=n):
                vk = tuple(km[0] for km, _ in chosen)
                key = (tree.delta, vk)
                if key in omega_cache:
                    o1, o2 = omega_cache[key]
                else:
                    o1, o2 = omega_recursive(DecoratedTree(tree, vk, V.d), freq.omega)
                    omega_cache[key] = (o1, o2)
                if o1 == 0 and o2 == 0:
                    continue
                coeff = c_tree
                for _, c in chosen:
                    coeff *= c
                ws = [
                    (k, tuple(mu * mi for mi in m)) for (k, m), _ in chosen
                ]
                weight = coeff * sigma_tree_bracket(ws, tree, hbar)
                K = tuple(sum(km[0][i] for km, _ in chosen) for i in range(V.d))
                M = tuple(sum(km[1][i] for km, _ in chosen) for i in range(V.d))
                if o1 != 0:
                    h_data[(K, M)] = h_data.get((K, M), 0.0) + o1 * weight
                else:
                    r_data[(K, M)] = r_data.get((K, M), 0.0) + o2 * weight
        Hn = TorusSymbol(V.d, V.L, h_data, k_cap=V.k_cap, m_cap=V.m_cap)
        Rn = TorusSymbol(V.d, V.L, r_data, k_cap=V.k_cap, m_cap=V.m_cap)
        pairs.append((Hn, Rn))
    return _series(pairs, hbar, freq, s_grid)


def hierarchy_residuals(V: TorusSymbol, series: LindstedtSeries) -> list:
    """Per-order defect of the conjugation hierarchy, one norm per order.

    The right side of each order is rebuilt with the literal composition
    sum, so none of the intermediates of :func:`lindstedt_terms` are
    reused; a residual at roundoff certifies that (H_n, Rp_n) solve their
    equation, not that two copies of the same code agree.
    """
    freq = series.omega
    hbar = series.hbar
    hs = [H for H, _ in series.orders]
    rps = [Rp for _, Rp in series.orders]
    mean_free = V - rps[0]
    cache_v: dict = {}
    cache_r: dict = {}
    out = []
    for n in range(1, series.order_count + 1):
        if n == 1:
            rhs = V
        else:
            rhs = _psi_inverse_compositions(hs, mean_free, n - 1, hbar, cache_v)
            for m in range(2, n):
                rhs = rhs - _psi_inverse_compositions(
                    hs, rps[m - 1], n - m, hbar, cache_r.setdefault(m, {})
                )
        defect = directional_x_derivative(freq.omega, hs[n - 1]) + rps[n - 1] - rhs
        out.append(defect.analytic_norm(0.0))
    return out


def series_agreement(a: LindstedtSeries, b: LindstedtSeries) -> float:
    """Worst relative s=0 deviation between two series, order by order."""
    if a.order_count != b.order_count:
        raise ValueError("series have different truncation orders")
    worst = 0.0
    for (Ha, Ra), (Hb, Rb) in zip(a.orders, b.orders):
        scale = max(1.0, Ha.analytic_norm(0.0), Ra.analytic_norm(0.0))
        dev = max((Ha - Hb).analytic_norm(0.0), (Ra - Rb).analytic_norm(0.0))
        worst = max(worst, dev / scale)
    return worst


def counterterm(series: LindstedtSeries, t: float) -> TorusSymbol:
    """R(t) = sum (t^n / n) Rp_n, the integrated counterterm; x-independent."""
    d = series.omega.d
    L = series.orders[0][0].L if series.orders else 2 * math.pi
    total = TorusSymbol.zero(d, L)
    for n, (_, Rp) in enumerate(series.orders, start=1):
        total = total + Rp * (t**n / n)
    return total


def norm_growth_report(series: LindstedtSeries, s0: float, sigma: float) -> dict:
    """Per-order n-th roots of analytic norms at s0 - sigma.

    The fitted constant is the largest root in the computed range; the
    report flags blow-up (a non-finite root) rather than extrapolating.
    """
    if not 0 <= sigma < s0:
        raise ValueError("need 0 <= sigma < s0")
    s = s0 - sigma
    rows = []
    for n, (H, Rp) in enumerate(series.orders, start=1):
        rows.append(
            {
                "order": n,
                "h_norm_root": H.analytic_norm(s) ** (1.0 / n),
                "rprime_norm_root": Rp.analytic_norm(s) ** (1.0 / n),
            }
        )
    roots = [r["h_norm_root"] for r in rows] + [r["rprime_norm_root"] for r in rows]
    constant = max(roots) if roots else 0.0
    return {
        "s": s,
        "rows": rows,
        "fitted_constant": constant,
        "bounded": bool(np.isfinite(constant)),
    }
