"""The eleven-point acceptance battery.

Each criterion is a standalone function returning a CriterionResult; the
suite subcommand and the test gate both call these, so there is exactly one
implementation of every check.  Two criteria pin a scenario whose measured
quantity vanishes identically (the single-cosine perturbation conjugates
exactly, leaving only roundoff); those report status "degenerate" with the
literal clause honestly failed and the mechanism demonstrated on a
non-degenerate companion.  See the repository notes for the analysis.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import dynamics
from .divisors import (
    DecoratedTree,
    eliasson_bound_check,
    omega1_class_sum,
    omega1_resonance_sum,
    omega_recursive,
    rho,
    sigma_jacobi_residual,
    tmap_injective,
)
from .errors import ResonantFrequencyError
from .lindstedt import (
    hierarchy_residuals,
    lindstedt_terms,
    lindstedt_terms_tree,
    series_agreement,
)
from .symbols import AffineSymbol, FrequencyVector, TorusSymbol, random_symbol
from .trees import (
    catalan,
    composition_coefficient,
    enumerate_delta,
    jacobi_coefficient_check,
    permutation_sum_check,
)
from .weyl import (
    check_calderon_vaillancourt,
    check_commutator_loss,
    directional_x_derivative,
    moyal_commutator,
    poisson_bracket,
    quantize,
)

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    status: str  # pass | fail | degenerate
    summary: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = {"pass": "PASS", "fail": "FAIL", "degenerate": "FAIL(degenerate)"}[self.status]
        return f"criterion {self.cid:2d} {tag:16s} {self.name}: {self.summary} [{self.seconds:.1f}s]"

    def to_json_dict(self) -> dict:
        return {
            "id": self.cid,
            "name": self.name,
            "passed": self.passed,
            "status": self.status,
            "summary": self.summary,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


def _result(cid, name, passed, summary, detail, t0, degenerate=False) -> CriterionResult:
    if passed:
        status = "pass"
    else:
        status = "degenerate" if degenerate else "fail"
    return CriterionResult(cid, name, passed, status, summary, detail, time.time() - t0)


def _fit_slope(ts, values) -> float:
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        return float("nan")
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])


def _cos_x() -> TorusSymbol:
    return TorusSymbol.from_terms([((1,), (0,), 0.5), ((-1,), (0,), 0.5)])


def _companion() -> TorusSymbol:
    # cos x (1 + sin(mu xi)): same x-modes, but a xi-dependent envelope so
    # the generator is genuinely time dependent and the defect is O(t^3).
    return TorusSymbol.from_terms(
        [
            ((1,), (0,), 0.5),
            ((-1,), (0,), 0.5),
            ((1,), (1,), -0.25j),
            ((1,), (-1,), 0.25j),
            ((-1,), (1,), -0.25j),
            ((-1,), (-1,), 0.25j),
        ]
    )


def criterion_1() -> CriterionResult:
    """Tree counts match the Catalan sequence and stay under 4^n."""
    t0 = time.time()
    expected = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862]
    counts = []
    ok = True
    for n in range(1, 11):
        trees = enumerate_delta(n)
        counts.append(len(trees))
        ok &= len(trees) == catalan(n - 1) == expected[n - 1]
        ok &= len(trees) <= 4**n
    elapsed = time.time() - t0
    ok &= elapsed < 60.0
    return _result(
        1,
        "tree counts",
        ok,
        f"counts {counts} in {elapsed:.1f}s",
        {"counts": counts, "seconds": elapsed},
        t0,
    )


def criterion_2() -> CriterionResult:
    """Exact-rational composition and bracket-coefficient identities."""
    t0 = time.time()
    comp_checked = 0
    failures = 0

    def compositions(total):
        if total == 0:
            yield ()
            return
        for first in range(1, total + 1):
            for rest in compositions(total - first):
                yield (first,) + rest

    for n in range(1, 8):
        for comp in compositions(n):
            comp_checked += 1
            if not permutation_sum_check(comp):
                failures += 1
    rng = np.random.default_rng(1201)
    jac_checked = 0
    for _ in range(500):
        l1 = int(rng.integers(1, 8))
        ls0 = tuple(int(x) for x in rng.integers(1, 8, size=int(rng.integers(1, 5))))
        jac_checked += 1
        if not jacobi_coefficient_check(l1, ls0):
            failures += 1
    # spot anchor: c_{k} telescopes to 1/k on singleton compositions
    for k in range(1, 8):
        if composition_coefficient((k,)) != Fraction(1, k):
            failures += 1
    ok = failures == 0
    return _result(
        2,
        "exact-rational identities",
        ok,
        f"{comp_checked} compositions + {jac_checked} bracket instances, {failures} failures",
        {"compositions": comp_checked, "jacobi": jac_checked, "failures": failures},
        t0,
    )


def criterion_3() -> CriterionResult:
    """Moyal layer: exact transport, both Jacobi identities, bracket slope."""
    t0 = time.time()
    rng = np.random.default_rng(303)
    detail: dict = {}
    ok = True

    worst_transport = 0.0
    for d in (1, 2):
        om = FrequencyVector((1.0,) if d == 1 else (1.0, GOLDEN))
        for _ in range(15):
            a = random_symbol(rng, d=d, n_modes=5, k_max=2, m_max=2, real=False)
            for hbar in (1.0, 0.37, 0.02):
                lhs = moyal_commutator(AffineSymbol(om), a, hbar)
                rhs = directional_x_derivative(om.omega, a)
                dev = (lhs - rhs).analytic_norm(0.0) / max(1.0, a.analytic_norm(0.0))
                worst_transport = max(worst_transport, dev)
    detail["transport_dev"] = worst_transport
    ok &= worst_transport <= 1e-13

    worst_jacobi = 0.0
    for _ in range(200):
        syms = [random_symbol(rng, n_modes=4, k_max=2, m_max=2, real=False) for _ in range(3)]
        hbar = float(rng.uniform(0.05, 1.0))
        a, b, c = syms
        j = (
            moyal_commutator(moyal_commutator(a, b, hbar), c, hbar)
            + moyal_commutator(moyal_commutator(b, c, hbar), a, hbar)
            + moyal_commutator(moyal_commutator(c, a, hbar), b, hbar)
        )
        scale = max(1.0, *(s.analytic_norm(0.0) for s in syms))
        worst_jacobi = max(worst_jacobi, j.analytic_norm(0.0) / scale)
    detail["moyal_jacobi"] = worst_jacobi
    ok &= worst_jacobi <= 1e-11

    worst_sigma = 0.0
    for _ in range(1000):
        ws = [
            (
                tuple(int(x) for x in rng.integers(-4, 5, size=1)),
                tuple(float(x) for x in rng.uniform(-3, 3, size=1)),
            )
            for _ in range(3)
        ]
        hbar = float(rng.uniform(0.05, 1.0))
        worst_sigma = max(worst_sigma, sigma_jacobi_residual(*ws, hbar))
    detail["sigma_jacobi"] = worst_sigma
    ok &= worst_sigma <= 1e-12

    a = random_symbol(rng, n_modes=5, k_max=3, m_max=3, real=False)
    b = random_symbol(rng, n_modes=5, k_max=3, m_max=3, real=False)
    pb = poisson_bracket(a, b)
    hbars = [0.4, 0.2, 0.1, 0.05, 0.025]
    errs = [(moyal_commutator(a, b, h) - pb).analytic_norm(0.0) for h in hbars]
    slope = _fit_slope(hbars, errs)
    detail["bracket_slope"] = slope
    ok &= slope >= 1.9

    return _result(
        3,
        "Moyal layer",
        ok,
        (
            f"transport {worst_transport:.1e}, Jacobi {worst_jacobi:.1e}, "
            f"sigma-Jacobi {worst_sigma:.1e}, bracket slope {slope:.2f}"
        ),
        detail,
        t0,
    )


def criterion_4() -> CriterionResult:
    """Three-way first-kind coefficient agreement over the full n <= 5 box."""
    t0 = time.time()
    om = (1.0,)
    worst = 0.0
    cases = 0
    skipped = 0
    rho_ok = True
    inj_ok = True
    from itertools import product as iproduct

    for n in range(1, 6):
        for tree in enumerate_delta(n):
            for v in iproduct(range(-2, 3), repeat=n):
                dt = DecoratedTree(tree, list(v))
                try:
                    o1, _ = omega_recursive(dt, om)
                    o1_res = omega1_resonance_sum(dt, om)
                    o1_cls = omega1_class_sum(dt, om)
                except ResonantFrequencyError:
                    skipped += 1
                    continue
                cases += 1
                scale = max(1.0, abs(o1))
                worst = max(worst, abs(o1 - o1_res) / scale, abs(o1 - o1_cls) / scale)
                r = rho(dt)
                rho_ok &= r <= 8**n and r <= 2 ** (3 * n)
                inj_ok &= tmap_injective(dt)
    ok = worst <= 1e-10 and rho_ok and inj_ok
    return _result(
        4,
        "three-way coefficient agreement",
        ok,
        (
            f"{cases} cases ({skipped} resonant skipped), worst rel dev {worst:.2e}, "
            f"rho bounds {'ok' if rho_ok else 'VIOLATED'}, "
            f"triple map {'injective' if inj_ok else 'COLLIDING'}"
        ),
        {"cases": cases, "skipped": skipped, "worst": worst},
        t0,
    )


def criterion_5() -> CriterionResult:
    """Randomized first-kind coefficient bound sweep up to order 6."""
    t0 = time.time()
    rng = np.random.default_rng(505)
    violations = 0
    checked = 0
    worst_ratio = 0.0
    for n in range(1, 7):
        trees = enumerate_delta(n)
        for _ in range(150):
            tree = trees[int(rng.integers(len(trees)))]
            v = [int(x) for x in rng.integers(-3, 4, size=n)]
            om = FrequencyVector((1.0,) if rng.integers(2) else (GOLDEN,))
            dt = DecoratedTree(tree, v)
            k_cap = max(1, max(abs(x) for x in v) * n)
            try:
                lhs, rhs = eliasson_bound_check(dt, om, K_max=k_cap)
            except ResonantFrequencyError:
                continue
            checked += 1
            if rhs > 0:
                worst_ratio = max(worst_ratio, lhs / rhs)
            if lhs > rhs * (1 + 1e-12):
                violations += 1
    ok = violations == 0 and checked > 0
    return _result(
        5,
        "first-kind coefficient bound",
        ok,
        f"{checked} sampled cases, {violations} violations, worst lhs/rhs {worst_ratio:.2e}",
        {"checked": checked, "violations": violations, "worst_ratio": worst_ratio},
        t0,
    )


def criterion_6() -> CriterionResult:
    """Direct hierarchy vs tree expansion, plus per-order equation defects."""
    t0 = time.time()
    rng = np.random.default_rng(606)
    worst_agree = 0.0
    worst_defect = 0.0
    for i in range(20):
        V = random_symbol(rng, n_modes=5, k_max=2, m_max=2, scale=0.7)
        hbar = float(rng.uniform(0.1, 1.0))
        omega = 1.0 if i % 2 == 0 else GOLDEN
        direct = lindstedt_terms(V, omega, hbar, 3)
        tree = lindstedt_terms_tree(V, omega, hbar, 3)
        worst_agree = max(worst_agree, series_agreement(direct, tree))
        worst_defect = max(worst_defect, max(hierarchy_residuals(V, direct)))
    ok = worst_agree <= 1e-9 and worst_defect <= 1e-11
    return _result(
        6,
        "hierarchy cross-oracle",
        ok,
        f"20 symbols, worst route disagreement {worst_agree:.2e}, worst equation defect {worst_defect:.2e}",
        {"worst_agreement": worst_agree, "worst_defect": worst_defect},
        t0,
    )


def _residual_sweep(V, hbars, ts, N, J):
    out = {}
    for hbar in hbars:
        series = lindstedt_terms(V, 1.0, hbar, N)
        out[hbar] = [dynamics.conjugation_residual(V, series, t, hbar, J) for t in ts]
    return out


def criterion_7() -> CriterionResult:
    """Quantum defect order t^(N+1), uniformly over the hbar grid."""
    t0 = time.time()
    hbars = [1.0, 0.5, 0.1, 0.02]
    ts = list(np.geomspace(1e-3, 1e-1, 5))
    residuals = _residual_sweep(_cos_x(), hbars, ts, 2, 32)
    slopes = {h: _fit_slope(ts, r) for h, r in residuals.items()}
    consts = {h: r[-1] / ts[-1] ** 3 for h, r in residuals.items()}
    max_resid = max(max(r) for r in residuals.values())
    spread = max(consts.values()) / max(min(consts.values()), 1e-300)
    literal = all(np.nan_to_num(s) >= 2.7 for s in slopes.values()) and spread < 10
    detail = {
        "slopes": {str(h): s for h, s in slopes.items()},
        "constant_spread": spread,
        "max_residual": max_resid,
    }
    degenerate = not literal and max_resid < 1e-11
    if degenerate:
        # The pinned perturbation conjugates exactly; the defect is pure
        # roundoff, so a log-log slope of it is noise.  Demonstrate the
        # t^3 mechanism on the xi-modulated companion instead.
        comp = _residual_sweep(_companion(), hbars, ts, 2, 32)
        cslopes = {h: _fit_slope(ts, r) for h, r in comp.items()}
        cconsts = {h: r[-1] / ts[-1] ** 3 for h, r in comp.items()}
        cspread = max(cconsts.values()) / min(cconsts.values())
        detail["companion"] = {
            "slopes": {str(h): s for h, s in cslopes.items()},
            "constant_spread": cspread,
        }
        companion_ok = all(s >= 2.7 for s in cslopes.values()) and cspread < 10
        summary = (
            f"pinned scenario defect is roundoff (max {max_resid:.1e}); slope fit "
            f"undefined; companion slopes {[round(s, 2) for s in cslopes.values()]} "
            f"spread {cspread:.1f} {'ok' if companion_ok else 'VIOLATED'}"
        )
        degenerate = companion_ok
        return _result(7, "quantum defect order", False, summary, detail, t0, degenerate)
    summary = (
        f"slopes {[round(np.nan_to_num(s), 2) for s in slopes.values()]}, "
        f"constant spread {spread:.2f}"
    )
    return _result(7, "quantum defect order", literal, summary, detail, t0)


def criterion_8() -> CriterionResult:
    """Interior spectrum matches the transport reference after renormalizing."""
    t0 = time.time()
    V = _cos_x()
    t = 0.05
    fractions = {}
    for hbar in (1.0, 0.5, 0.1, 0.02):
        series = lindstedt_terms(V, 1.0, hbar, 2)
        _, frac = dynamics.spectrum_check(V, series, t, hbar, 32)
        fractions[str(hbar)] = frac
    ok = all(f >= 0.95 for f in fractions.values())
    return _result(
        8,
        "interior spectrum match",
        ok,
        f"matched fractions {fractions} at tol 10 t^3",
        {"fractions": fractions},
        t0,
    )


def criterion_9() -> CriterionResult:
    """Classical defect order and linear flow displacement bound."""
    t0 = time.time()
    ts = list(np.geomspace(1e-3, 1e-1, 5))
    V = _cos_x()
    # hbar = 0 selects the Poisson-bracket hierarchy; the defect of a
    # quantum series here would carry a spurious t^2 hbar^2 term.
    series = lindstedt_terms(V, 1.0, 0.0, 2)
    residuals = []
    disp_ratio = []
    for t in ts:
        flow = dynamics.classical_flow(series, t)
        residuals.append(dynamics.classical_conjugation_residual(V, series, t, flow=flow))
        disp_ratio.append(flow.displacement_sup() / t)
    slope = _fit_slope(ts, residuals)
    C = max(disp_ratio)
    flow_ok = np.isfinite(C)
    max_resid = max(residuals)
    literal = np.nan_to_num(slope) >= 2.7 and flow_ok
    detail = {"slope": slope, "C": C, "max_residual": max_resid}
    degenerate = not literal and max_resid < 1e-11 and flow_ok
    if degenerate:
        comp_series = lindstedt_terms(_companion(), 1.0, 0.0, 2)
        comp_res = [
            dynamics.classical_conjugation_residual(_companion(), comp_series, t) for t in ts
        ]
        cslope = _fit_slope(ts, comp_res)
        detail["companion_slope"] = cslope
        degenerate = cslope >= 2.7
        summary = (
            f"pinned scenario defect is roundoff (max {max_resid:.1e}); companion "
            f"slope {cslope:.2f}; displacement constant {C:.3f} finite"
        )
        return _result(9, "classical defect order", False, summary, detail, t0, degenerate)
    summary = f"slope {slope:.2f}, displacement constant {C:.3f}"
    return _result(9, "classical defect order", literal, summary, detail, t0)


def criterion_10() -> CriterionResult:
    """Eigenfunction pairings against the transported-average reference."""
    t0 = time.time()
    hbar = 1.0 / 200.0
    J = 220
    t = 0.05
    rng = np.random.default_rng(1010)
    tests = []
    for _ in range(10):
        a = random_symbol(rng, n_modes=4, k_max=2, m_max=2)
        tests.append(a * (1.0 / a.analytic_norm(0.0)))

    V = _cos_x()
    series = lindstedt_terms(V, 1.0, hbar, 2)
    est = dynamics.semiclassical_measure(V, series, t, tests, [hbar], J)
    sup_t = est.sup_deviation()
    est0 = dynamics.semiclassical_measure(V, series, 0.0, tests, [hbar], J)
    sup_0 = est0.sup_deviation()

    Vxi = TorusSymbol.from_terms([((0,), (1,), 0.5), ((0,), (-1,), 0.5)])
    series_xi = lindstedt_terms(Vxi, 1.0, hbar, 2)
    est_xi = dynamics.semiclassical_measure(Vxi, series_xi, t, tests, [hbar], J)
    sup_xi = est_xi.sup_deviation()

    comp_series = lindstedt_terms(_companion(), 1.0, hbar, 2)
    est_c = dynamics.semiclassical_measure(_companion(), comp_series, t, tests, [hbar], J)

    ok = sup_t <= 0.05 and sup_0 <= 1e-10 and sup_xi <= 1e-10
    return _result(
        10,
        "semiclassical measures",
        ok,
        (
            f"sup dev {sup_t:.2e} at t={t}, {sup_0:.1e} at t=0, {sup_xi:.1e} "
            f"x-independent, companion {est_c.sup_deviation():.3f}"
        ),
        {
            "sup_t": sup_t,
            "sup_t0": sup_0,
            "sup_x_independent": sup_xi,
            "companion": est_c.sup_deviation(),
        },
        t0,
    )


def criterion_11() -> CriterionResult:
    """Quantization, bracket-loss, and conjugation-flow norm inequalities."""
    t0 = time.time()
    rng = np.random.default_rng(1111)
    detail: dict = {}

    worst_cv = 0.0
    for _ in range(100):
        a = random_symbol(rng, n_modes=6, k_max=3, m_max=3, real=False)
        for hbar in (1.0, 0.5, 0.1, 0.02):
            worst_cv = max(worst_cv, check_calderon_vaillancourt(a, hbar, 16, 0.0))
    cv_ok = worst_cv <= 1.0 + 1e-10
    detail["worst_quantization_ratio"] = worst_cv

    loss_violations = 0
    for _ in range(200):
        a = random_symbol(rng, n_modes=5, k_max=3, m_max=3, real=False)
        b = random_symbol(rng, n_modes=5, k_max=3, m_max=3, real=False)
        s = float(rng.uniform(0.5, 1.5))
        sigma1 = float(rng.uniform(0.05, s / 3))
        sigma2 = float(rng.uniform(0.0, s / 3))
        hbar = float(rng.uniform(0.05, 1.0))
        lhs, rhs = check_commutator_loss(a, b, hbar, s, sigma1, sigma2)
        if lhs > rhs * (1 + 1e-12):
            loss_violations += 1
    detail["commutator_loss_violations"] = loss_violations

    admissible = 0
    doubling_violations = 0
    attempts = 0
    while admissible < 40 and attempts < 120:
        attempts += 1
        V = random_symbol(rng, n_modes=4, k_max=2, m_max=2)
        norm = V.analytic_norm(0.8)
        if norm == 0:
            continue
        V = V * (0.25 / norm)
        a = random_symbol(rng, n_modes=4, k_max=2, m_max=2, real=False)
        hbar = float(rng.uniform(0.1, 1.0))
        series = lindstedt_terms(V, 1.0, hbar, 2, s_grid=(0.0, 0.8))
        with warnings.catch_warnings():
            warnings.simplefilter("error", RuntimeWarning)
            try:
                dynamics.symbolic_conjugation(a, series, 0.05, s=0.8, sigma=0.4)
            except RuntimeWarning:
                continue  # smallness condition failed; not an admissible case
            except RuntimeError:
                doubling_violations += 1
                continue
        admissible += 1
    detail["doubling_cases"] = admissible
    detail["doubling_violations"] = doubling_violations

    ok = cv_ok and loss_violations == 0 and doubling_violations == 0 and admissible >= 40
    return _result(
        11,
        "norm-estimate suite",
        ok,
        (
            f"quantization ratio <= {worst_cv:.6f}, bracket-loss violations "
            f"{loss_violations}/200, doubling violations {doubling_violations}/{admissible}"
        ),
        detail,
        t0,
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_all(ids=None, echo=None) -> list:
    """Run the battery (or a subset) and return the result list."""
    ids = sorted(CRITERIA) if ids is None else sorted(ids)
    unknown = [i for i in ids if i not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown criterion ids: {unknown}")
    results = []
    for cid in ids:
        result = CRITERIA[cid]()
        results.append(result)
        if echo is not None:
            echo(result.line())
    return results
