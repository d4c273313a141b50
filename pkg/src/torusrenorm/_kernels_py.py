"""Pure numpy implementation of the pairwise lattice-combine kernel.

Given the coefficient arrays of two lattice symbols, form all pairwise mode
sums with the weight of the requested operation and aggregate duplicates.
The compiled extension in ``_kernels.pyx`` implements the same contract;
both lanes must produce identical (sorted) outputs.

Weight conventions, with p = m1.k2 - m2.k1 for a pair of modes:

* product        exp(+i mu hbar p / 2)
* commutator     -(2 / hbar) sin(mu hbar p / 2)
* poisson        -mu p

These are the exact factors that make ``quantize(combine(a, b))`` equal to
the matrix product or scaled matrix commutator of ``quantize(a)`` and
``quantize(b)``, and the Poisson weight is the hbar -> 0 limit of the
commutator weight.
"""

from __future__ import annotations

import numpy as np

MODE_PRODUCT = 0
MODE_COMMUTATOR = 1
MODE_POISSON = 2


def combine(k1, m1, c1, k2, m2, c2, mu: float, hbar: float, mode: int):
    """Pairwise combine with aggregation.

    Parameters are int64 arrays of shape (N, d) for the mode indices,
    complex arrays of shape (N,) for coefficients. Returns ``(K, M, C)``
    aggregated over repeated output modes and sorted by packed mode key.
    """
    k1 = np.ascontiguousarray(k1, dtype=np.int64)
    m1 = np.ascontiguousarray(m1, dtype=np.int64)
    k2 = np.ascontiguousarray(k2, dtype=np.int64)
    m2 = np.ascontiguousarray(m2, dtype=np.int64)
    c1 = np.ascontiguousarray(c1, dtype=np.complex128)
    c2 = np.ascontiguousarray(c2, dtype=np.complex128)
    n1, d = k1.shape
    n2 = k2.shape[0]
    if n1 == 0 or n2 == 0:
        empty = np.zeros((0, d), dtype=np.int64)
        return empty, empty.copy(), np.zeros(0, dtype=np.complex128)

    K = (k1[:, None, :] + k2[None, :, :]).reshape(-1, d)
    M = (m1[:, None, :] + m2[None, :, :]).reshape(-1, d)
    p = (m1 @ k2.T - k1 @ m2.T).astype(float).reshape(-1)
    c = (c1[:, None] * c2[None, :]).reshape(-1)

    if mode == MODE_PRODUCT:
        c = c * np.exp(0.5j * mu * hbar * p)
    elif mode == MODE_COMMUTATOR:
        c = c * (-(2.0 / hbar) * np.sin(0.5 * mu * hbar * p))
    elif mode == MODE_POISSON:
        c = c * (-mu * p)
    else:
        raise ValueError(f"unknown combine mode {mode}")

    cols = np.concatenate([K, M], axis=1)
    lo = cols.min(axis=0)
    shifted = (cols - lo).astype(np.int64)
    dims = shifted.max(axis=0) + 1
    keys = np.ravel_multi_index(tuple(shifted.T), tuple(dims))
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    c = c[order]
    cols = cols[order]
    _uniq, start = np.unique(keys, return_index=True)
    sums = np.add.reduceat(c, start)
    out = cols[start]
    return (
        np.ascontiguousarray(out[:, :d]),
        np.ascontiguousarray(out[:, d:]),
        np.ascontiguousarray(sums),
    )
