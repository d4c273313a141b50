"""Propagators, classical flows, and the verification experiments.

Everything here consumes a LindstedtSeries and turns it into matrices,
flows, spectra, and measure pairings.  Operator-level assertions are
restricted to an interior mode block because truncation pollutes the edge
rows of every quantized product.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ShellMatchError, UnitarityDriftError
from .lindstedt import LindstedtSeries, counterterm
from .symbols import TorusSymbol
from .weyl import OperatorMatrix, box_modes, moyal_commutator, quantize, transport_matrix

UNITARITY_TOL = 1e-8

SCHEME = "midpoint-exponential"


def x_gradient(a: TorusSymbol) -> list[TorusSymbol]:
    """Per-axis x-derivatives, exact on the lattice."""
    out = []
    for axis in range(a.d):
        out.append(a._wrap({km: 1j * km[0][axis] * c for km, c in a.items()}))
    return out


def xi_gradient(a: TorusSymbol) -> list[TorusSymbol]:
    """Per-axis xi-derivatives; the xi frequency unit is 2 pi / L."""
    mu = a.mu
    out = []
    for axis in range(a.d):
        out.append(a._wrap({km: 1j * mu * km[1][axis] * c for km, c in a.items()}))
    return out


def _generator_fn(source):
    if isinstance(source, LindstedtSeries):
        return source.generator
    if isinstance(source, TorusSymbol):
        return lambda tau: source
    if callable(source):
        return source
    raise TypeError("generator must be a LindstedtSeries, a symbol, or a callable")


def _default_steps(generator, t: float) -> int:
    scale = generator(t).analytic_norm(0.0)
    return max(8, int(math.ceil(10.0 * abs(t) * max(1.0, scale))))


@dataclass
class PropagatorPath:
    """Unitary evolution sampled on a uniform time grid.

    ``unitaries[i]`` is the solution operator from time 0 to ``times[i]``;
    the control record keeps the step count and the worst unitarity drift
    seen along the path.
    """

    times: tuple
    unitaries: tuple
    scheme: str = SCHEME
    control: dict = field(default_factory=dict)

    def final(self) -> OperatorMatrix:
        return self.unitaries[-1]

    def adjoint(self) -> "PropagatorPath":
        """The conjugate-transpose path, solving the adjoint evolution."""
        return PropagatorPath(
            self.times,
            tuple(u.dagger() for u in self.unitaries),
            self.scheme,
            dict(self.control),
        )


def propagate(generator, hbar: float, J: int, t: float, steps: int | None = None) -> PropagatorPath:
    """Solve dU/dt = -(i/hbar) Op(G(t)) U by midpoint exponentials.

    ``generator`` supplies the (real) symbol G(tau); each step conjugates
    by the exact exponential of the midpoint quantization, so unitarity
    holds to round-off and the scheme is second order in the step for
    time-dependent generators, exact for frozen ones.
    """
    gen = _generator_fn(generator)
    if t < 0:
        raise ValueError("backward propagation not supported; conjugate instead")
    if steps is None:
        steps = _default_steps(gen, t) if t > 0 else 1
    probe = gen(0.0)
    d = probe.d
    n = (2 * J + 1) ** d
    eye = np.eye(n, dtype=np.complex128)
    times = [0.0]
    mats = [eye]
    cur = eye
    drift_max = 0.0
    dt = t / steps if steps else 0.0
    for k in range(steps if t > 0 else 0):
        mid = (k + 0.5) * dt
        A = quantize(gen(mid), hbar, J)
        if not A.is_hermitian(1e-10):
            raise ValueError("generator quantization is not hermitian; need a real symbol")
        w, P = np.linalg.eigh(A.mat)
        step_u = (P * np.exp(-1j * dt / hbar * w)) @ P.conj().T
        cur = step_u @ cur
        drift = float(np.linalg.norm(cur.conj().T @ cur - eye))
        drift_max = max(drift_max, drift)
        if drift > UNITARITY_TOL:
            raise UnitarityDriftError(
                f"unitarity drift {drift:.2e} at step {k + 1}/{steps}; reduce the step size"
            )
        times.append((k + 1) * dt)
        mats.append(cur)
    control = {"steps": steps, "dt": dt, "max_unitarity_drift": drift_max}
    unitaries = tuple(OperatorMatrix(J, hbar, d, m) for m in mats)
    return PropagatorPath(tuple(times), unitaries, SCHEME, control)


def renormalization_unitary(
    series: LindstedtSeries, hbar: float, J: int, t: float, steps: int | None = None
) -> OperatorMatrix:
    """The conjugating unitary: adjoint of the path generated by -H(t)."""
    path = propagate(lambda tau: -series.generator(tau), hbar, J, t, steps)
    return path.final().dagger()


def default_interior_band(
    symbol: TorusSymbol, series: LindstedtSeries, t: float = 0.0, hbar: float | None = None
) -> int:
    """Band width so edge pollution decays faster than the residual order.

    Two leakage mechanisms set the width: bracket orders spread mode
    support by the generator's x-band, and the classical xi-drift moves
    the edge zone inward by about t max|grad_x H| / hbar lattice units.
    """
    widths = [H.support_k() for H, _ in series.orders]
    widths.append(symbol.support_k())
    kh = max([1] + widths)
    drift = 0
    if hbar is not None and t > 0:
        gen = series.generator(t)
        grad_scale = max(
            [g.analytic_norm(0.0) for g in x_gradient(gen)] + [0.0]
        )
        drift = int(math.ceil(1.5 * t * grad_scale / hbar))
    return (series.order_count + 2) * kh + drift + 4


def conjugation_residual(
    V: TorusSymbol,
    series: LindstedtSeries,
    t: float,
    hbar: float,
    J: int,
    *,
    steps: int | None = None,
    band: int | None = None,
) -> float:
    """Interior operator norm of U* (transport + Op(tV - R(t))) U - transport.

    U is the renormalization unitary of the series; with the exact series
    the residual is the order-(N+1) truncation defect.
    """
    W = propagate(lambda tau: -series.generator(tau), hbar, J, t, steps).final()
    pert = V * t - counterterm(series, t)
    L = transport_matrix(series.omega.omega, hbar, J, d=V.d)
    A = L + quantize(pert, hbar, J)
    # U* A U with U = W^dagger
    M = (W @ A @ W.dagger()) - L
    if band is None:
        band = default_interior_band(V, series, t, hbar)
    sub = M.restricted(band)
    if sub.size == 0:
        raise ValueError(f"band {band} leaves no interior modes at J={J}")
    return float(np.linalg.norm(sub, 2))


# -- classical flow ----------------------------------------------------------


@dataclass
class PhaseFlowMap:
    """Sampled symplectic map, stored as periodic displacement fields.

    The displacement components live on the x times xi grid and, after
    spectral projection, as lattice symbols; both representations are kept
    since grid values are exact at the nodes while the symbols extend the
    map off-grid.
    """

    t: float
    d: int
    L: float
    x_axis: np.ndarray
    xi_axis: np.ndarray
    dx_values: np.ndarray
    dxi_values: np.ndarray
    dx_symbols: tuple
    dxi_symbols: tuple
    symplectic_residual: float

    def apply(self, x, xi):
        """Map points (x, xi) through the flow via the projected symbols."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1:] != (1,)):
            x = x[..., None]
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1:] != (1,)):
            xi = xi[..., None]
        dx = np.stack([s.evaluate(x, xi).real for s in self.dx_symbols], axis=-1)
        dxi = np.stack([s.evaluate(x, xi).real for s in self.dxi_symbols], axis=-1)
        return x + dx, xi + dxi

    def displacement_sup(self) -> float:
        """Grid sup of the displacement, componentwise max."""
        vals = [np.abs(self.dx_values).max(initial=0.0), np.abs(self.dxi_values).max(initial=0.0)]
        return float(max(vals))

    def displacement_norm(self, s: float = 0.0) -> float:
        """Analytic norm of the displacement symbols, componentwise max."""
        norms = [sym.analytic_norm(s) for sym in self.dx_symbols + self.dxi_symbols]
        return float(max(norms)) if norms else 0.0


def _project_grid(values: np.ndarray, d: int, L: float, tol: float = 1e-12) -> TorusSymbol:
    """FFT projection of grid samples onto a lattice symbol.

    ``values`` is indexed by d x-axes then d xi-axes.  Nyquist rows are
    dropped so conjugate-mirror symmetry survives the projection.
    """
    coeffs = np.fft.fftn(values) / values.size
    sym_data: dict = {}
    shape = values.shape
    cap = max(np.abs(coeffs).max(initial=0.0), 1.0)
    for idx in np.argwhere(np.abs(coeffs) > tol * cap):
        modes = []
        skip = False
        for axis, a in enumerate(idx):
            na = shape[axis]
            mode = int(a) if a <= na // 2 else int(a) - na
            if abs(mode) > (na - 1) // 2:
                skip = True
                break
            modes.append(mode)
        if skip:
            continue
        k = tuple(modes[:d])
        m = tuple(modes[d:])
        sym_data[(k, m)] = complex(coeffs[tuple(idx)])
    return TorusSymbol(d, L, sym_data)


def classical_flow(
    series: LindstedtSeries,
    t: float,
    *,
    n_x: int = 64,
    n_xi: int = 32,
    steps: int | None = None,
    fixed_point_tol: float = 1e-13,
) -> PhaseFlowMap:
    """The inverse of the flow generated by -H, integrated symplectically.

    Runs implicit midpoint on z' = X_{H(t-s)}(z) over a product grid of
    the torus and one xi period; the time reversal turns inversion into
    forward integration.  Symplecticity is checked through the Jacobian of
    the projected displacement field.
    """
    d = series.omega.d
    L = series.orders[0][0].L if series.orders else 2 * math.pi
    if steps is None:
        steps = _default_steps(series.generator, t) if t > 0 else 1
    x_axis = np.linspace(0.0, 2.0 * math.pi, n_x, endpoint=False)
    xi_axis = np.linspace(0.0, L, n_xi, endpoint=False)
    axes = [x_axis] * d + [xi_axis] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_shape = mesh[0].shape
    x = np.stack([g.ravel() for g in mesh[:d]], axis=-1)
    xi = np.stack([g.ravel() for g in mesh[d:]], axis=-1)
    x0, xi0 = x.copy(), xi.copy()

    dt = t / steps if t > 0 else 0.0
    for k in range(steps if t > 0 else 0):
        tau = t - (k + 0.5) * dt
        H = series.generator(tau)
        gx = x_gradient(H)
        gxi = xi_gradient(H)
        xm, xim = x, xi
        for _ in range(60):
            fx = np.stack([g.evaluate(xm, xim).real for g in gxi], axis=-1)
            fxi = -np.stack([g.evaluate(xm, xim).real for g in gx], axis=-1)
            xm_new = x + 0.5 * dt * fx
            xim_new = xi + 0.5 * dt * fxi
            delta = max(
                np.abs(xm_new - xm).max(initial=0.0), np.abs(xim_new - xim).max(initial=0.0)
            )
            xm, xim = xm_new, xim_new
            if delta < fixed_point_tol:
                break
        x = 2.0 * xm - x
        xi = 2.0 * xim - xi

    dx = x - x0
    dxi = xi - xi0
    dx_symbols = tuple(_project_grid(dx[:, c].reshape(grid_shape), d, L) for c in range(d))
    dxi_symbols = tuple(_project_grid(dxi[:, c].reshape(grid_shape), d, L) for c in range(d))

    resid = _symplectic_residual(dx_symbols, dxi_symbols, x0, xi0, d)
    return PhaseFlowMap(
        t=float(t),
        d=d,
        L=L,
        x_axis=x_axis,
        xi_axis=xi_axis,
        dx_values=dx.reshape(grid_shape + (d,)),
        dxi_values=dxi.reshape(grid_shape + (d,)),
        dx_symbols=dx_symbols,
        dxi_symbols=dxi_symbols,
        symplectic_residual=resid,
    )


def _symplectic_residual(dx_symbols, dxi_symbols, x, xi, d: int) -> float:
    """max |J^T S J - S| over the grid, J the Jacobian of the map."""
    P = x.shape[0]
    jac = np.zeros((P, 2 * d, 2 * d))
    for i in range(2 * d):
        jac[:, i, i] = 1.0
    comps = list(dx_symbols) + list(dxi_symbols)
    for i, sym in enumerate(comps):
        for axis, gsym in enumerate(x_gradient(sym)):
            jac[:, i, axis] += gsym.evaluate(x, xi).real
        for axis, gsym in enumerate(xi_gradient(sym)):
            jac[:, i, d + axis] += gsym.evaluate(x, xi).real
    S = np.zeros((2 * d, 2 * d))
    S[:d, d:] = np.eye(d)
    S[d:, :d] = -np.eye(d)
    res = np.einsum("pji,jk,pkl->pil", jac, S, jac) - S
    return float(np.abs(res).max(initial=0.0))


def classical_conjugation_residual(
    V: TorusSymbol,
    series: LindstedtSeries,
    t: float,
    *,
    flow: PhaseFlowMap | None = None,
    **flow_kwargs,
) -> float:
    """Grid max of (L_omega + tV - R(t)) composed with the flow, minus L_omega."""
    if flow is None:
        flow = classical_flow(series, t, **flow_kwargs)
    omega = np.asarray(series.omega.omega, dtype=float)
    R = counterterm(series, t)
    mesh = np.meshgrid(*([flow.x_axis] * flow.d + [flow.xi_axis] * flow.d), indexing="ij")
    x = np.stack([g.ravel() for g in mesh[: flow.d]], axis=-1)
    xi = np.stack([g.ravel() for g in mesh[flow.d :]], axis=-1)
    x1, xi1 = flow.apply(x, xi)
    vals = (
        (xi1 - xi) @ omega
        + t * V.evaluate(x1, xi1).real
        - R.evaluate(x1, xi1).real
    )
    return float(np.abs(vals).max(initial=0.0))


def compose_with_flow(a: TorusSymbol, flow: PhaseFlowMap, tol: float = 1e-12) -> TorusSymbol:
    """Lattice projection of a composed with the flow map.

    Samples a(Phi(z)) on the flow's grid and projects by FFT; warns when
    the outermost retained modes still carry mass, since that signals
    aliasing from support growth under composition.
    """
    mesh = np.meshgrid(*([flow.x_axis] * flow.d + [flow.xi_axis] * flow.d), indexing="ij")
    grid_shape = mesh[0].shape
    x = np.stack([g.ravel() for g in mesh[: flow.d]], axis=-1)
    xi = np.stack([g.ravel() for g in mesh[flow.d :]], axis=-1)
    x1, xi1 = flow.apply(x, xi)
    vals = a.evaluate(x1, xi1).reshape(grid_shape)
    sym = _project_grid(vals, flow.d, flow.L, tol=tol)
    edge = 0.0
    for (k, m), c in sym.items():
        if max(abs(v) for v in k) >= len(flow.x_axis) // 2 - 1 or max(
            abs(v) for v in m
        ) >= len(flow.xi_axis) // 2 - 1:
            edge += abs(c)
    if edge > 1e-8 * max(1.0, sym.analytic_norm(0.0)):
        warnings.warn(
            f"composed symbol carries {edge:.2e} mass on the outermost grid modes; "
            "increase the flow grid",
            RuntimeWarning,
            stacklevel=2,
        )
    return sym


def egorov_residual(
    a: TorusSymbol,
    series: LindstedtSeries,
    t: float,
    hbar: float,
    J: int,
    *,
    flow: PhaseFlowMap | None = None,
    steps: int | None = None,
    band: int | None = None,
) -> float:
    """Interior norm of U* Op(a) U - Op(a o Phi_t); order hbar."""
    if flow is None:
        flow = classical_flow(series, t, steps=steps)
    W = propagate(lambda tau: -series.generator(tau), hbar, J, t, steps).final()
    composed = compose_with_flow(a, flow)
    M = (W @ quantize(a, hbar, J) @ W.dagger()) - quantize(composed, hbar, J)
    if band is None:
        band = default_interior_band(a, series, t, hbar)
    sub = M.restricted(band)
    if sub.size == 0:
        raise ValueError(f"band {band} leaves no interior modes at J={J}")
    return float(np.linalg.norm(sub, 2))


# -- spectra and measures ----------------------------------------------------


def renormalized_matrix(
    V: TorusSymbol, series: LindstedtSeries, t: float, hbar: float, J: int
) -> OperatorMatrix:
    """transport + Op(tV - R(t)), the operator the series renormalizes."""
    pert = V * t - counterterm(series, t)
    return transport_matrix(series.omega.omega, hbar, J, d=V.d) + quantize(pert, hbar, J)


def spectrum_check(
    V: TorusSymbol,
    series: LindstedtSeries,
    t: float,
    hbar: float,
    J: int,
    *,
    band: int | None = None,
    tol: float | None = None,
) -> tuple[np.ndarray, float]:
    """Eigenvalues of the renormalized matrix against the transport lattice.

    Interior reference values hbar omega.j are matched to the nearest
    eigenvalue within ``tol`` (default 10 t^(N+1)); returns the full
    spectrum and the matched fraction on the interior block.
    """
    A = renormalized_matrix(V, series, t, hbar, J)
    if not A.is_hermitian(1e-10):
        raise ValueError("renormalized matrix is not hermitian; V must be real")
    eigs = np.linalg.eigvalsh(A.mat)
    if tol is None:
        tol = 10.0 * abs(t) ** (series.order_count + 1)
    if band is None:
        band = default_interior_band(V, series, t, hbar)
    modes = box_modes(J, V.d)
    interior = np.max(np.abs(modes), axis=1) <= J - band
    if not np.any(interior):
        raise ValueError(f"band {band} leaves no interior modes at J={J}")
    omega = np.asarray(series.omega.omega, dtype=float)
    refs = hbar * (modes[interior] @ omega)
    pos = np.searchsorted(eigs, refs)
    pos = np.clip(pos, 1, len(eigs) - 1)
    nearest = np.where(
        np.abs(eigs[pos] - refs) < np.abs(eigs[pos - 1] - refs), eigs[pos], eigs[pos - 1]
    )
    matched = np.abs(nearest - refs) <= tol
    return eigs, float(np.count_nonzero(matched) / matched.size)


@dataclass
class MeasureEstimate:
    """Wigner pairings of shell eigenfunctions against flow-transported averages."""

    t: float
    shell: float
    records: tuple  # one dict per hbar: eigenvalue, mode, xi0, pairings, references

    def sup_deviation(self) -> float:
        worst = 0.0
        for rec in self.records:
            for p, r in zip(rec["pairings"], rec["references"]):
                worst = max(worst, abs(p - r))
        return worst


def semiclassical_measure(
    V: TorusSymbol,
    series: LindstedtSeries,
    t: float,
    test_symbols,
    hbar_list,
    J: int,
    *,
    shell: float = 1.0,
    window: float = 0.25,
    flow: PhaseFlowMap | None = None,
    n_x: int = 256,
) -> MeasureEstimate:
    """Pair shell eigenfunctions with test symbols and compare to the flow.

    For each hbar the eigenfunction nearest the shell value is selected
    (ties resolved toward the largest plane-wave overlap); the reference is
    the x-average of the symbol along the flow image of the invariant
    circle at the matched xi0.
    """
    if flow is None:
        flow = classical_flow(series, t)
    test_symbols = list(test_symbols)
    x_pts = np.linspace(0.0, 2.0 * math.pi, n_x, endpoint=False)
    records = []
    for hbar in hbar_list:
        A = renormalized_matrix(V, series, t, float(hbar), J)
        if not A.is_hermitian(1e-10):
            raise ValueError("renormalized matrix is not hermitian; V must be real")
        w, P = np.linalg.eigh(A.mat)
        gap = np.abs(w - shell)
        best = gap.min()
        if best > window:
            raise ShellMatchError(
                f"no eigenvalue within {window} of shell {shell} at hbar={hbar}"
            )
        modes = box_modes(J, V.d)
        omega = np.asarray(series.omega.omega, dtype=float)
        refs = float(hbar) * (modes @ omega)
        j_star = modes[int(np.argmin(np.abs(refs - shell)))]
        candidates = np.flatnonzero(gap <= best + 1e-12)
        if len(candidates) > 1:
            # tie: prefer the vector concentrated on the unperturbed plane wave
            row = np.ravel_multi_index(tuple(np.asarray(j_star) + J), (2 * J + 1,) * V.d)
            overlaps = np.abs(P[row, candidates])
            idx = int(candidates[int(np.argmax(overlaps))])
        else:
            idx = int(candidates[0])
        psi = P[:, idx]
        xi0 = float(hbar) * np.asarray(j_star, dtype=float)
        pairings = []
        references = []
        for a in test_symbols:
            Ma = quantize(a, float(hbar), J)
            pairings.append(complex(psi.conj() @ (Ma.mat @ psi)))
            if V.d == 1:
                xg = x_pts[:, None]
            else:
                mesh = np.meshgrid(*([x_pts] * V.d), indexing="ij")
                xg = np.stack([g.ravel() for g in mesh], axis=-1)
            x1, xi1 = flow.apply(xg, np.broadcast_to(xi0, xg.shape))
            references.append(complex(np.mean(a.evaluate(x1, xi1))))
        records.append(
            {
                "hbar": float(hbar),
                "eigenvalue": float(w[idx]),
                "mode": tuple(int(v) for v in np.atleast_1d(j_star)),
                "xi0": tuple(float(v) for v in np.atleast_1d(xi0)),
                "pairings": pairings,
                "references": references,
            }
        )
    return MeasureEstimate(t=float(t), shell=float(shell), records=tuple(records))


# -- symbolic conjugation ----------------------------------------------------


def symbolic_conjugation(
    a: TorusSymbol,
    series: LindstedtSeries,
    t: float,
    hbar: float | None = None,
    *,
    s: float | None = None,
    sigma: float | None = None,
    N: int | None = None,
) -> TorusSymbol:
    """Partial sum of the symbol-level conjugation flow applied to a.

    The order-n coefficient obeys psi_n(a) = (1/n) sum_j psi_j([H_{n-j}, a])
    with psi_0 the identity.  When (s, sigma) are supplied the smallness
    condition 2 ||H||_{s,t} / sigma^2 <= 1/2 is tested: if it holds the
    doubling bound on the output norm is asserted, otherwise a warning is
    issued and the partial sum returned as-is.
    """
    if hbar is None:
        hbar = series.hbar
    if N is None:
        N = series.order_count
    if N > series.order_count:
        raise ValueError("series truncated below the requested order")
    hs = [H for H, _ in series.orders]

    def psi(n: int, b: TorusSymbol) -> TorusSymbol:
        if n == 0:
            return b
        total = None
        for j in range(n):
            term = psi(j, moyal_commutator(hs[n - j - 1], b, hbar))
            total = term if total is None else total + term
        return total * (1.0 / n)

    result = a
    for n in range(1, N + 1):
        result = result + psi(n, a) * (t**n)

    if s is not None and sigma is not None:
        if not 0 < sigma < s:
            raise ValueError("need 0 < sigma < s")
        h_norm = sum(
            (t**n) * H.analytic_norm(s) for n, (H, _) in enumerate(series.orders, start=1)
        )
        if 2.0 * h_norm / sigma**2 <= 0.5:
            lhs = result.analytic_norm(s - sigma)
            rhs = 2.0 * a.analytic_norm(s)
            if lhs > rhs:
                raise RuntimeError(
                    f"conjugation norm {lhs:.6e} exceeds doubling bound {rhs:.6e} "
                    "despite the smallness condition"
                )
        else:
            warnings.warn(
                "smallness condition fails at these (s, sigma, t); doubling bound not asserted",
                RuntimeWarning,
                stacklevel=2,
            )
    return result
