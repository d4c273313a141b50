"""Kernel dispatch for the pairwise lattice-combine operation.

Imports the compiled extension when it is available, otherwise falls back
to the numpy implementation. ``TORUSRENORM_PURE=1`` in the environment
forces the fallback, which is what the lane-equivalence tests and the
benchmark use to compare the two.
"""

from __future__ import annotations

import os

from . import _kernels_py

MODE_PRODUCT = _kernels_py.MODE_PRODUCT
MODE_COMMUTATOR = _kernels_py.MODE_COMMUTATOR
MODE_POISSON = _kernels_py.MODE_POISSON

COMPILED = False
_impl = _kernels_py
if os.environ.get("TORUSRENORM_PURE") != "1":
    try:
        from . import _kernels as _ext
    except ImportError:
        pass
    else:
        _impl = _ext
        COMPILED = True


def backend_name() -> str:
    return "compiled" if COMPILED else "numpy"


def combine(k1, m1, c1, k2, m2, c2, mu: float, hbar: float, mode: int):
    """Aggregate all pairwise mode sums with the weight of ``mode``.

    See ``_kernels_py.combine`` for the exact contract. ``hbar`` must be
    positive for the product and commutator modes; it is ignored by the
    Poisson mode.
    """
    if mode in (MODE_PRODUCT, MODE_COMMUTATOR) and not hbar > 0:
        raise ValueError("hbar must be positive for quantized combine modes")
    return _impl.combine(k1, m1, c1, k2, m2, c2, float(mu), float(hbar), int(mode))


def combine_pure(k1, m1, c1, k2, m2, c2, mu: float, hbar: float, mode: int):
    """Always use the numpy lane, regardless of what is installed."""
    return _kernels_py.combine(k1, m1, c1, k2, m2, c2, float(mu), float(hbar), int(mode))
