"""Trigonometric lattice symbols on the torus phase space.

A symbol is a finite sum

    a(x, xi) = sum_{k,m} c_{k,m} exp(i k.x) exp(i (2 pi / L) m.xi)

with x on the d-torus and xi periodized with period L in every component.
Working on a lattice in both variables keeps every operation (products,
commutators, quantization) exact: frequency averages become finite sums and
no quadrature enters the calculus. All Fourier normalization constants are
absorbed into the coefficients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ResonantFrequencyError

__all__ = [
    "FrequencyVector",
    "TorusSymbol",
    "AffineSymbol",
    "analytic_norm",
    "diophantine_estimate",
    "elementary_sup",
    "random_symbol",
]

#: Relative magnitude below which coefficients are dropped on construction.
DROP_TOL = 1e-16


def _as_index(value, d: int) -> tuple[int, ...]:
    """Normalize an integer or an iterable of integers to a length-d tuple."""
    if isinstance(value, (int, np.integer)):
        value = (int(value),)
    out = tuple(int(v) for v in value)
    if len(out) != d:
        raise ValueError(f"index {value!r} does not have dimension {d}")
    return out


class TorusSymbol:
    """Finite lattice symbol with x-modes ``k`` and xi-modes ``m``.

    Parameters
    ----------
    d : int
        Dimension of the torus (1 or 2 at desk scale; larger values work
        but are untested for performance).
    L : float
        Period of the xi variable. The xi frequency unit is ``2 pi / L``.
    coeffs : mapping
        Maps ``(k, m)`` pairs (each a length-d tuple of ints) to complex
        coefficients.
    k_cap, m_cap : int or None
        Declared support bounds. Products keep full additive support unless
        caps are set, in which case overflowing modes are dropped and their
        s=0 norm is recorded on ``tail_norm``.
    drop_tol : float
        Relative coefficient magnitude below which entries are pruned.
    """

    __slots__ = ("d", "L", "_coeffs", "k_cap", "m_cap", "tail_norm")

    def __init__(
        self,
        d: int,
        L: float,
        coeffs: Mapping | Iterable | None = None,
        *,
        k_cap: int | None = None,
        m_cap: int | None = None,
        drop_tol: float = DROP_TOL,
        tail_norm: float = 0.0,
    ) -> None:
        if d < 1:
            raise ValueError("dimension must be at least 1")
        if not L > 0:
            raise ValueError("xi period L must be positive")
        self.d = int(d)
        self.L = float(L)
        self.k_cap = k_cap
        self.m_cap = m_cap
        self.tail_norm = float(tail_norm)
        data: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}
        if coeffs:
            items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
            for (k, m), c in items:
                key = (_as_index(k, self.d), _as_index(m, self.d))
                data[key] = data.get(key, 0.0) + complex(c)
        self._coeffs = self._prune(data, drop_tol)
        self._apply_caps()

    @staticmethod
    def _prune(data, drop_tol):
        if not data:
            return {}
        top = max(abs(c) for c in data.values())
        if top == 0.0:
            return {}
        cut = top * drop_tol
        return {key: c for key, c in data.items() if abs(c) > cut}

    def _apply_caps(self) -> None:
        if self.k_cap is None and self.m_cap is None:
            return
        keep = {}
        dropped = 0.0
        for (k, m), c in self._coeffs.items():
            over_k = self.k_cap is not None and max(map(abs, k), default=0) > self.k_cap
            over_m = self.m_cap is not None and max(map(abs, m), default=0) > self.m_cap
            if over_k or over_m:
                dropped += abs(c)
            else:
                keep[(k, m)] = c
        if dropped:
            self.tail_norm += dropped
            self._coeffs = keep

    # -- basic container protocol -------------------------------------------

    @property
    def coeffs(self) -> Mapping:
        return self._coeffs

    def items(self) -> Iterator:
        return iter(self._coeffs.items())

    def __len__(self) -> int:
        return len(self._coeffs)

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def coeff(self, k, m) -> complex:
        return self._coeffs.get((_as_index(k, self.d), _as_index(m, self.d)), 0.0 + 0.0j)

    @property
    def mu(self) -> float:
        """xi frequency unit 2 pi / L."""
        return 2.0 * math.pi / self.L

    def support_k(self) -> int:
        """Largest |k|_inf over the support (0 for the zero symbol)."""
        return max((max(map(abs, k), default=0) for (k, _m) in self._coeffs), default=0)

    def support_m(self) -> int:
        return max((max(map(abs, m), default=0) for (_k, m) in self._coeffs), default=0)

    def _wrap(self, data, tail: float = 0.0) -> "TorusSymbol":
        return TorusSymbol(
            self.d,
            self.L,
            data,
            k_cap=self.k_cap,
            m_cap=self.m_cap,
            tail_norm=self.tail_norm + tail,
        )

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "TorusSymbol") -> "TorusSymbol":
        self._check_compatible(other)
        data = dict(self._coeffs)
        for key, c in other._coeffs.items():
            data[key] = data.get(key, 0.0) + c
        return self._wrap(data, tail=other.tail_norm)

    def __sub__(self, other: "TorusSymbol") -> "TorusSymbol":
        return self + (-1.0) * other

    def __neg__(self) -> "TorusSymbol":
        return (-1.0) * self

    def __mul__(self, scalar) -> "TorusSymbol":
        s = complex(scalar)
        return self._wrap({key: s * c for key, c in self._coeffs.items()})

    __rmul__ = __mul__

    def conjugate(self) -> "TorusSymbol":
        data = {}
        for (k, m), c in self._coeffs.items():
            nk = tuple(-v for v in k)
            nm = tuple(-v for v in m)
            data[(nk, nm)] = data.get((nk, nm), 0.0) + c.conjugate()
        return self._wrap(data)

    def x_average(self) -> "TorusSymbol":
        """Projection onto the x-independent part (k = 0 modes)."""
        zero = (0,) * self.d
        data = {key: c for key, c in self._coeffs.items() if key[0] == zero}
        return self._wrap(data)

    def _check_compatible(self, other: "TorusSymbol") -> None:
        if not isinstance(other, TorusSymbol):
            raise TypeError("expected a TorusSymbol")
        if other.d != self.d or not math.isclose(other.L, self.L, rel_tol=1e-12):
            raise ValueError("symbols live on different lattices")

    # -- analysis ------------------------------------------------------------

    def is_real(self, tol: float = 1e-13) -> bool:
        """True when the symbol is a real-valued function, i.e. the
        coefficients satisfy c_{-k,-m} = conj(c_{k,m})."""
        if not self._coeffs:
            return True
        top = max(abs(c) for c in self._coeffs.values())
        for (k, m), c in self._coeffs.items():
            mirror = self._coeffs.get((tuple(-v for v in k), tuple(-v for v in m)), 0.0)
            if abs(mirror - c.conjugate()) > tol * top:
                return False
        return True

    def analytic_norm(self, s: float) -> float:
        """Weighted coefficient norm sum |c| exp(s (|k| + |2 pi m / L|))
        with Euclidean mode norms."""
        mu = self.mu
        total = 0.0
        for (k, m), c in self._coeffs.items():
            wk = math.sqrt(sum(v * v for v in k))
            wm = mu * math.sqrt(sum(v * v for v in m))
            total += abs(c) * math.exp(s * (wk + wm))
        return total

    def evaluate(self, x, xi):
        """Evaluate on points. ``x`` and ``xi`` are arrays with trailing
        dimension d (or plain arrays when d = 1), broadcast together."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1:] != (1,)):
            x = x[..., None]
        if self.d == 1 and (xi.ndim == 0 or xi.shape[-1:] != (1,)):
            xi = xi[..., None]
        mu = self.mu
        out = np.zeros(np.broadcast(x[..., 0], xi[..., 0]).shape, dtype=complex)
        for (k, m), c in self._coeffs.items():
            phase = x @ np.array(k, dtype=float) + mu * (xi @ np.array(m, dtype=float))
            out = out + c * np.exp(1j * phase)
        return out

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        coeffs = [
            {"k": list(k), "m": list(m), "re": float(c.real), "im": float(c.imag)}
            for (k, m), c in sorted(self._coeffs.items())
        ]
        return {"d": self.d, "L": self.L, "real": self.is_real(), "coeffs": coeffs}

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "TorusSymbol":
        try:
            d = int(payload["d"])
            L = float(payload["L"])
            entries = payload["coeffs"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed symbol payload: {exc}") from exc
        data = {}
        for entry in entries:
            k = _as_index(entry["k"], d)
            m = _as_index(entry["m"], d)
            if (k, m) in data:
                raise ValueError(f"duplicate coefficient for modes k={k}, m={m}")
            data[(k, m)] = complex(float(entry["re"]), float(entry.get("im", 0.0)))
        sym = cls(d, L, data)
        declared_real = bool(payload.get("real", False))
        if declared_real and not sym.is_real(tol=1e-10):
            raise ValueError("symbol declared real but coefficients violate the symmetry")
        return sym

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "TorusSymbol":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, d: int = 1, L: float = 2.0 * math.pi) -> "TorusSymbol":
        return cls(d, L, {})

    @classmethod
    def constant(cls, value, d: int = 1, L: float = 2.0 * math.pi) -> "TorusSymbol":
        zero = (0,) * d
        return cls(d, L, {(zero, zero): complex(value)})

    @classmethod
    def from_terms(cls, terms, d: int = 1, L: float = 2.0 * math.pi) -> "TorusSymbol":
        """Build from an iterable of (k, m, coefficient) triples."""
        return cls(d, L, {(k, m): c for k, m, c in terms})

    def __repr__(self) -> str:
        return (
            f"TorusSymbol(d={self.d}, L={self.L:g}, modes={len(self._coeffs)}, "
            f"supp_k={self.support_k()}, supp_m={self.support_m()})"
        )


@dataclass(frozen=True)
class FrequencyVector:
    """Transport frequency with its arithmetic (diophantine) profile."""

    omega: tuple[float, ...]
    gamma_exp: float = 1.0
    varsigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in np.atleast_1d(self.omega)))
        if self.gamma_exp <= 0:
            raise ValueError("diophantine exponent must be positive")

    @property
    def d(self) -> int:
        return len(self.omega)

    def dot(self, k) -> float:
        return float(sum(w * float(v) for w, v in zip(self.omega, k)))

    def varsigma_or_estimate(self, K_max: int) -> float:
        if self.varsigma is not None:
            return self.varsigma
        return diophantine_estimate(self.omega, self.gamma_exp, K_max)


@dataclass(frozen=True)
class AffineSymbol:
    """Affine transport symbol omega.xi plus a lattice perturbation."""

    omega: FrequencyVector
    periodic: TorusSymbol = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.periodic is None:
            object.__setattr__(self, "periodic", TorusSymbol.zero(self.omega.d))
        if self.periodic.d != self.omega.d:
            raise ValueError("frequency and periodic part have different dimensions")


def analytic_norm(a: TorusSymbol, s: float) -> float:
    """Module-level alias for :meth:`TorusSymbol.analytic_norm`."""
    return a.analytic_norm(s)


def diophantine_estimate(omega, gamma_exp: float, K_max: int) -> float:
    """Smallest |omega.k| |k|^gamma over integer vectors 0 < |k|_inf <= K_max.

    The value is the best constant varsigma such that the diophantine lower
    bound |omega.k| >= varsigma / |k|^gamma holds on the scanned box. It is
    monotonically non-increasing in K_max. An exact zero of omega.k inside
    the box raises :class:`ResonantFrequencyError`.
    """
    omega = tuple(float(w) for w in np.atleast_1d(omega))
    d = len(omega)
    if K_max < 1:
        raise ValueError("K_max must be at least 1")
    if gamma_exp <= 0:
        raise ValueError("gamma_exp must be positive")
    grids = np.meshgrid(*[np.arange(-K_max, K_max + 1)] * d, indexing="ij")
    K = np.stack([g.ravel() for g in grids], axis=-1)
    K = K[np.any(K != 0, axis=1)]
    dots = K @ np.array(omega)
    if np.any(dots == 0.0):
        k0 = K[np.argmax(dots == 0.0)]
        raise ResonantFrequencyError(f"omega.k vanishes exactly at k={tuple(int(v) for v in k0)}")
    norms = np.sqrt(np.sum(K.astype(float) ** 2, axis=1))
    return float(np.min(np.abs(dots) * norms**gamma_exp))


def elementary_sup(m: float, s: float) -> float:
    """sup_{t >= 0} t^m exp(-t s) = (m / (e s))^m, with the m = 0 value 1."""
    if s <= 0:
        raise ValueError("decay rate s must be positive")
    if m < 0:
        raise ValueError("power m must be nonnegative")
    if m == 0:
        return 1.0
    return float((m / (math.e * s)) ** m)


def random_symbol(
    rng: np.random.Generator,
    d: int = 1,
    L: float = 2.0 * math.pi,
    n_modes: int = 6,
    k_max: int = 3,
    m_max: int = 3,
    real: bool = True,
    scale: float = 1.0,
) -> TorusSymbol:
    """Random lattice symbol with the given support box, used by tests,
    benchmarks, and the CLI suite. With ``real=True`` the conjugate-mirror
    symmetry is enforced so the symbol is a real function."""
    data: dict = {}
    tries = 0
    while len(data) < n_modes and tries < 50 * n_modes:
        tries += 1
        k = tuple(int(rng.integers(-k_max, k_max + 1)) for _ in range(d))
        m = tuple(int(rng.integers(-m_max, m_max + 1)) for _ in range(d))
        c = complex(rng.normal(), rng.normal()) * scale
        if real:
            nk, nm = tuple(-v for v in k), tuple(-v for v in m)
            if (k, m) == (nk, nm):
                c = complex(c.real, 0.0)
            data[(k, m)] = data.get((k, m), 0) + c
            data[(nk, nm)] = data.get((nk, nm), 0) + c.conjugate()
        else:
            data[(k, m)] = data.get((k, m), 0) + c
    return TorusSymbol(d, L, data)
