"""Weyl quantization on momentum boxes and the star-product layer.

A lattice symbol acts on the momentum box {|j|_inf <= J} through the matrix
M[j_out, j_in] = ahat(j_out - j_in, hbar (j_out + j_in] / 2), where ahat is
the partial Fourier transform in x. Affine generators omega.xi quantize to
the exact diagonal hbar omega.j and commute by the exact transport rule, so
no quadrature error enters through the unperturbed part.

Products, commutators and Poisson brackets of lattice symbols reduce to the
pairwise combine kernel; this module owns the symbol-level wrappers, the cap
and tail bookkeeping, and the norm inequalities used by the test batteries.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .symbols import AffineSymbol, TorusSymbol, analytic_norm

MAGIC = b"WEYLMAT1"

# Dense-matrix guard: quantization is desk scale by design.
MAX_MATRIX_DIM = 6000


def box_modes(J: int, d: int) -> np.ndarray:
    """All lattice points of {|j|_inf <= J}^d as an (N, d) int array."""
    side = np.arange(-J, J + 1, dtype=np.int64)
    grids = np.meshgrid(*[side] * d, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass
class OperatorMatrix:
    """Square complex matrix over the momentum box, with provenance tags."""

    J: int
    hbar: float
    d: int
    mat: np.ndarray
    tail_norm: float = 0.0

    def __post_init__(self):
        n = (2 * self.J + 1) ** self.d
        self.mat = np.asarray(self.mat, dtype=np.complex128)
        if self.mat.shape != (n, n):
            raise ValueError(f"matrix shape {self.mat.shape} does not match box size {n}")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def modes(self) -> np.ndarray:
        return box_modes(self.J, self.d)

    def flat_index(self, j) -> int:
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        if np.any(np.abs(j) > self.J):
            raise IndexError(f"mode {tuple(j)} outside box J={self.J}")
        return int(np.ravel_multi_index(tuple(j + self.J), (2 * self.J + 1,) * self.d))

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.J, self.hbar, self.d, self.mat.conj().T, self.tail_norm)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.abs(self.mat).max(initial=0.0)))
        return bool(np.abs(self.mat - self.mat.conj().T).max(initial=0.0) <= tol * scale)

    def operator_norm(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.linalg.norm(self.mat, 2))

    def interior_mask(self, band: int) -> np.ndarray:
        """Boolean mask of flat indices with |j|_inf <= J - band."""
        if band < 0:
            raise ValueError("band must be nonnegative")
        modes = self.modes()
        return np.max(np.abs(modes), axis=1) <= self.J - band

    def restricted(self, band: int) -> np.ndarray:
        mask = self.interior_mask(band)
        return self.mat[np.ix_(mask, mask)]

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(
            self.J, self.hbar, self.d, self.mat + other.mat, self.tail_norm + other.tail_norm
        )

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(
            self.J, self.hbar, self.d, self.mat - other.mat, self.tail_norm + other.tail_norm
        )

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(
            self.J, self.hbar, self.d, self.mat @ other.mat, self.tail_norm + other.tail_norm
        )

    def scaled(self, z: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.J, self.hbar, self.d, z * self.mat, self.tail_norm)

    def _check_compatible(self, other: "OperatorMatrix"):
        if (self.J, self.d) != (other.J, other.d) or self.hbar != other.hbar:
            raise ValueError("operator boxes or hbar differ")

    def to_json_dict(self) -> dict:
        return {
            "J": self.J,
            "hbar": self.hbar,
            "re": self.mat.real.tolist(),
            "im": self.mat.imag.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "OperatorMatrix":
        J = int(data["J"])
        hbar = float(data["hbar"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
        if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
            raise ValueError("re/im must be equal square matrices")
        n = re.shape[0]
        d = _infer_dimension(n, J)
        return cls(J, hbar, d, re + 1j * im)

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load_json(cls, path) -> "OperatorMatrix":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save_binary(self, path):
        """Magic, then int64 J, float64 hbar, int64 N, then column-major complex128."""
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<qdq", self.J, self.hbar, self.dim))
            fh.write(np.asfortranarray(self.mat).tobytes(order="F"))

    @classmethod
    def load_binary(cls, path) -> "OperatorMatrix":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != MAGIC:
                raise ValueError(f"bad magic {magic!r}")
            J, hbar, n = struct.unpack("<qdq", fh.read(24))
            raw = np.frombuffer(fh.read(), dtype=np.complex128)
        if raw.size != n * n:
            raise ValueError("payload size does not match header")
        mat = raw.reshape((n, n), order="F")
        return cls(int(J), float(hbar), _infer_dimension(int(n), int(J)), mat.copy())


def _infer_dimension(n: int, J: int) -> int:
    side = 2 * J + 1
    if side == 1:
        if n != 1:
            raise ValueError("J = 0 box admits only 1x1 matrices")
        return 1
    d, total = 1, side
    while total < n:
        d += 1
        total *= side
    if total != n:
        raise ValueError(f"matrix dimension {n} is not a power of box side {side}")
    return d


def quantize(symbol, hbar: float, J: int) -> OperatorMatrix:
    """Weyl matrix of a lattice or affine symbol on the box {|j|_inf <= J}."""
    if not hbar > 0:
        raise ValueError("hbar must be positive")
    if J < 0:
        raise ValueError("J must be nonnegative")
    if isinstance(symbol, AffineSymbol):
        base = quantize(symbol.periodic, hbar, J)
        modes = base.modes()
        diag = hbar * (modes @ np.asarray(symbol.omega.omega, dtype=float))
        return OperatorMatrix(
            J, hbar, symbol.periodic.d, base.mat + np.diag(diag), base.tail_norm
        )
    a: TorusSymbol = symbol
    n = (2 * J + 1) ** a.d
    if n > MAX_MATRIX_DIM:
        raise ValueError(f"box size {n} exceeds desk-scale limit {MAX_MATRIX_DIM}")
    modes = box_modes(J, a.d)
    mat = np.zeros((n, n), dtype=np.complex128)
    mu = a.mu
    dropped = 0.0
    for (k, m), c in a.items():
        kv = np.asarray(k, dtype=np.int64)
        if np.max(np.abs(kv)) > 2 * J:
            dropped += abs(c)
            continue
        j_in = modes
        j_out = j_in + kv
        keep = np.max(np.abs(j_out), axis=1) <= J
        j_in = j_in[keep]
        j_out = j_out[keep]
        rows = np.ravel_multi_index(tuple((j_out + J).T), (2 * J + 1,) * a.d)
        cols = np.ravel_multi_index(tuple((j_in + J).T), (2 * J + 1,) * a.d)
        phase = 0.5 * mu * hbar * ((j_out + j_in) @ np.asarray(m, dtype=np.int64))
        mat[rows, cols] += c * np.exp(1j * phase)
    if dropped > 0.0:
        warnings.warn(
            f"{dropped:.3e} of s=0 coefficient mass has x-frequency beyond 2J and "
            "quantizes to zero on this box",
            RuntimeWarning,
            stacklevel=2,
        )
    return OperatorMatrix(J, hbar, a.d, mat, a.tail_norm + dropped)


def transport_matrix(omega, hbar: float, J: int, d: int | None = None) -> OperatorMatrix:
    """Diagonal quantization hbar omega.j of the transport generator."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    dd = len(omega) if d is None else d
    modes = box_modes(J, dd)
    return OperatorMatrix(J, hbar, dd, np.diag(hbar * (modes @ omega)))


def _symbol_arrays(a: TorusSymbol):
    n = len(a)
    k = np.zeros((n, a.d), dtype=np.int64)
    m = np.zeros((n, a.d), dtype=np.int64)
    c = np.zeros(n, dtype=np.complex128)
    for i, ((kk, mm), cc) in enumerate(a.items()):
        k[i] = kk
        m[i] = mm
        c[i] = cc
    return k, m, c


def _merge_caps(a: TorusSymbol, b: TorusSymbol):
    k_cap = min((c for c in (a.k_cap, b.k_cap) if c is not None), default=None)
    m_cap = min((c for c in (a.m_cap, b.m_cap) if c is not None), default=None)
    return k_cap, m_cap


def _combine_symbols(a: TorusSymbol, b: TorusSymbol, hbar: float, mode: int) -> TorusSymbol:
    if (a.d, a.L) != (b.d, b.L):
        raise ValueError("symbols live on different tori")
    k1, m1, c1 = _symbol_arrays(a)
    k2, m2, c2 = _symbol_arrays(b)
    K, M, C = kernels.combine(k1, m1, c1, k2, m2, c2, a.mu, hbar, mode)
    k_cap, m_cap = _merge_caps(a, b)
    coeffs = {
        (tuple(int(v) for v in K[i]), tuple(int(v) for v in M[i])): complex(C[i])
        for i in range(len(C))
    }
    out = TorusSymbol(a.d, a.L, coeffs, k_cap=k_cap, m_cap=m_cap)
    # Input tails propagate additively; the constructor adds anything it cut.
    out.tail_norm += a.tail_norm + b.tail_norm
    return out


def moyal_product(a: TorusSymbol, b: TorusSymbol, hbar: float) -> TorusSymbol:
    """Symbol of quantize(a) quantize(b); exact on the lattice."""
    return _combine_symbols(a, b, hbar, kernels.MODE_PRODUCT)


def moyal_commutator(a, b, hbar: float) -> TorusSymbol:
    """Scaled commutator symbol, (i/hbar)(a#b - b#a).

    Either argument may be affine; the affine part acts by the exact
    transport rule omega.grad_x on the other argument.  hbar = 0 selects
    the classical limit, the Poisson bracket.
    """
    if hbar == 0:
        return poisson_bracket(a, b)
    if isinstance(a, AffineSymbol) and isinstance(b, AffineSymbol):
        raise TypeError("commutator of two affine symbols is not supported")
    if isinstance(a, AffineSymbol):
        return directional_x_derivative(a.omega.omega, b) + moyal_commutator(a.periodic, b, hbar)
    if isinstance(b, AffineSymbol):
        return -(directional_x_derivative(b.omega.omega, a)) + moyal_commutator(a, b.periodic, hbar)
    return _combine_symbols(a, b, hbar, kernels.MODE_COMMUTATOR)


def poisson_bracket(a, b) -> TorusSymbol:
    """Classical bracket grad_xi a . grad_x b - grad_x a . grad_xi b, exact."""
    if isinstance(a, AffineSymbol) and isinstance(b, AffineSymbol):
        raise TypeError("bracket of two affine symbols is not supported")
    if isinstance(a, AffineSymbol):
        return directional_x_derivative(a.omega.omega, b) + poisson_bracket(a.periodic, b)
    if isinstance(b, AffineSymbol):
        return -(directional_x_derivative(b.omega.omega, a)) + poisson_bracket(a, b.periodic)
    return _combine_symbols(a, b, 1.0, kernels.MODE_POISSON)


def directional_x_derivative(omega, a: TorusSymbol) -> TorusSymbol:
    """omega . grad_x a, the exact transport action on a lattice symbol."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if len(omega) != a.d:
        raise ValueError("frequency dimension mismatch")
    coeffs = {}
    for (k, m), c in a.items():
        w = float(np.dot(omega, k))
        if w != 0.0:
            coeffs[(k, m)] = 1j * w * c
    return a._wrap(coeffs)


def check_calderon_vaillancourt(a: TorusSymbol, hbar: float, J: int, s: float) -> float:
    """Operator norm over analytic norm; 0 for the zero symbol."""
    na = analytic_norm(a, s)
    if na == 0.0:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        op = quantize(a, hbar, J)
    return op.operator_norm() / na


def check_commutator_loss(
    a: TorusSymbol, b: TorusSymbol, hbar: float, s: float, sigma1: float, sigma2: float
):
    """Bracket norm at the lowered index against its guaranteed bound.

    Returns (lhs, rhs) with lhs = ||[a,b]||_{s - sigma1 - sigma2} and
    rhs = 2/(e^2 sigma1 (sigma1 + sigma2)) ||a||_s ||b||_{s - sigma2}.
    """
    if sigma1 <= 0 or sigma2 < 0 or sigma1 + sigma2 >= s:
        raise ValueError("need 0 < sigma1, 0 <= sigma2, sigma1 + sigma2 < s")
    lhs = analytic_norm(moyal_commutator(a, b, hbar), s - sigma1 - sigma2)
    rhs = (
        2.0
        / (np.e**2 * sigma1 * (sigma1 + sigma2))
        * analytic_norm(a, s)
        * analytic_norm(b, s - sigma2)
    )
    return lhs, rhs
