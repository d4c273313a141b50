# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
# distutils: language = c++
"""Compiled pairwise lattice-combine kernel.

Mirrors the contract of ``_kernels_py.combine`` exactly: same weights, same
aggregation, same sorted output order. The hot loop fuses pair expansion
with hash-map aggregation so the (N1 x N2) intermediate never materializes.
"""

import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference as deref
from libc.math cimport cos, sin
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

cnp.import_array()

ctypedef cnp.int64_t i64

MODE_PRODUCT = 0
MODE_COMMUTATOR = 1
MODE_POISSON = 2


def combine(k1, m1, c1, k2, m2, c2, double mu, double hbar, int mode):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] K1 = np.ascontiguousarray(k1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] M1 = np.ascontiguousarray(m1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] K2 = np.ascontiguousarray(k2, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] M2 = np.ascontiguousarray(m2, dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] C1 = np.ascontiguousarray(c1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] C2 = np.ascontiguousarray(c2, dtype=np.complex128)

    cdef Py_ssize_t n1 = K1.shape[0]
    cdef Py_ssize_t d = K1.shape[1]
    cdef Py_ssize_t n2 = K2.shape[0]
    if mode not in (0, 1, 2):
        raise ValueError(f"unknown combine mode {mode}")
    if n1 == 0 or n2 == 0:
        empty = np.zeros((0, d), dtype=np.int64)
        return empty, empty.copy(), np.zeros(0, dtype=np.complex128)

    # Packing ranges per output field (d sums of k, then d sums of m),
    # computed from the input ranges so no pair array is needed.
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lo = np.empty(2 * d, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] span = np.empty(2 * d, dtype=np.int64)
    cdef Py_ssize_t t
    for t in range(d):
        lo[t] = np.min(K1[:, t]) + np.min(K2[:, t])
        span[t] = (np.max(K1[:, t]) + np.max(K2[:, t])) - lo[t] + 1
        lo[d + t] = np.min(M1[:, t]) + np.min(M2[:, t])
        span[d + t] = (np.max(M1[:, t]) + np.max(M2[:, t])) - lo[d + t] + 1

    cdef cnp.ndarray[cnp.int64_t, ndim=1] stride = np.empty(2 * d, dtype=np.int64)
    cdef i64 acc = 1
    for t in range(2 * d - 1, -1, -1):
        stride[t] = acc
        if span[t] > 0 and acc > (<i64>1 << 62) // span[t]:
            raise OverflowError("mode ranges too large for packed aggregation")
        acc *= span[t]

    cdef unordered_map[i64, Py_ssize_t] slot
    cdef vector[i64] keys
    cdef vector[double] re
    cdef vector[double] im

    cdef i64[:, ::1] k1v = K1, m1v = M1, k2v = K2, m2v = M2
    cdef double complex[::1] c1v = C1, c2v = C2
    cdef i64[::1] lov = lo, strv = stride

    cdef Py_ssize_t i, j, s
    cdef i64 key, p
    cdef double w, ph, sp, tmp, cr, ci, ar, ai, br, bi
    cdef double half = 0.5 * mu * hbar
    cdef unordered_map[i64, Py_ssize_t].iterator it

    slot.reserve(<size_t>(n1 * n2 if n1 * n2 < 1 << 20 else 1 << 20))
    for i in range(n1):
        ar = c1v[i].real
        ai = c1v[i].imag
        for j in range(n2):
            p = 0
            key = 0
            for t in range(d):
                p += m1v[i, t] * k2v[j, t] - m2v[j, t] * k1v[i, t]
                key += (k1v[i, t] + k2v[j, t] - lov[t]) * strv[t]
                key += (m1v[i, t] + m2v[j, t] - lov[d + t]) * strv[d + t]
            br = c2v[j].real
            bi = c2v[j].imag
            cr = ar * br - ai * bi
            ci = ar * bi + ai * br
            if mode == 0:
                ph = half * p
                w = cos(ph)
                sp = sin(ph)
                tmp = cr
                cr = cr * w - ci * sp
                ci = ci * w + tmp * sp
            elif mode == 1:
                w = -(2.0 / hbar) * sin(half * p)
                cr *= w
                ci *= w
            else:
                w = -mu * p
                cr *= w
                ci *= w
            it = slot.find(key)
            if it == slot.end():
                s = <Py_ssize_t>keys.size()
                slot[key] = s
                keys.push_back(key)
                re.push_back(cr)
                im.push_back(ci)
            else:
                s = deref(it).second
                re[s] += cr
                im[s] += ci

    cdef Py_ssize_t nout = <Py_ssize_t>keys.size()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] keyarr = np.empty(nout, dtype=np.int64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cout = np.empty(nout, dtype=np.complex128)
    for s in range(nout):
        keyarr[s] = keys[s]
    order = np.argsort(keyarr, kind="stable")
    cdef cnp.ndarray[cnp.int64_t, ndim=1] keysorted = keyarr[order]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] Kout = np.empty((nout, d), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] Mout = np.empty((nout, d), dtype=np.int64)
    cdef i64[::1] ksv = keysorted
    cdef i64[:, ::1] kov = Kout, mov = Mout
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ordarr = np.ascontiguousarray(order, dtype=np.int64)
    cdef i64[::1] ordv = ordarr
    cdef i64 rem, q
    for s in range(nout):
        rem = ksv[s]
        for t in range(2 * d):
            q = rem // strv[t]
            rem -= q * strv[t]
            if t < d:
                kov[s, t] = q + lov[t]
            else:
                mov[s, t - d] = q + lov[t]
        cout[s] = re[ordv[s]] + 1j * im[ordv[s]]
    return Kout, Mout, cout
