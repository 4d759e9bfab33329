# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lattice pair sum for the N^{s,gamma} grid norm."""

import numpy as np

from libc.math cimport sqrt, pow

from ._core_py import lattice_offsets, nsg_pair_sum as _py_pair_sum


cdef double _pair_sum3(const double[:, :, ::1] F, const double[:, :, ::1] P,
                       const double[:, :, :, ::1] V, const double[:, :, ::1] H,
                       const long[:, ::1] offs, double expo,
                       double d_min, double d_max) nogil:
    cdef Py_ssize_t n0 = F.shape[0], n1 = F.shape[1], n2 = F.shape[2]
    cdef Py_ssize_t nv = V.shape[3]
    cdef Py_ssize_t q, i, j, k, c, i2, j2, k2
    cdef long a0, a1, a2
    cdef double total = 0.0, dd, t, diff
    for q in range(offs.shape[0]):
        a0 = offs[q, 0]
        a1 = offs[q, 1]
        a2 = offs[q, 2]
        for i in range(max(0, -a0), min(n0, n0 - a0)):
            i2 = i + a0
            for j in range(max(0, -a1), min(n1, n1 - a1)):
                j2 = j + a1
                for k in range(max(0, -a2), min(n2, n2 - a2)):
                    k2 = k + a2
                    dd = 0.0
                    for c in range(nv):
                        t = V[i2, j2, k2, c] - V[i, j, k, c]
                        dd += t * t
                    t = H[i2, j2, k2] - H[i, j, k]
                    dd = sqrt(dd + t * t)
                    if dd < d_min or dd > d_max:
                        continue
                    diff = F[i2, j2, k2] - F[i, j, k]
                    total += P[i, j, k] * P[i2, j2, k2] * diff * diff / pow(dd, expo)
    return total


def nsg_pair_sum(F, P, V, double h, double s, double d_min, double d_max=1.0):
    """Same contract as the numpy version; n <= 3 runs compiled."""
    F = np.asarray(F, dtype=float)
    n = F.ndim
    if n > 3:
        return _py_pair_sum(F, P, V, h, s, d_min, d_max)
    pad = (1,) * (3 - n)
    V = np.asarray(V, dtype=float)
    F3 = np.ascontiguousarray(F.reshape(F.shape + pad))
    P3 = np.ascontiguousarray(np.asarray(P, dtype=float).reshape(F.shape + pad))
    V3 = np.ascontiguousarray(V.reshape(F.shape + pad + (n,)))
    H3 = np.ascontiguousarray(0.5 * np.sum(V3 * V3, axis=-1))
    offs = lattice_offsets(n, d_max / h)
    offs3 = np.zeros((offs.shape[0], 3), dtype=np.int_)
    offs3[:, :n] = offs
    cdef double total
    cdef double expo = n + 2.0 * s
    cdef const double[:, :, ::1] Fm = F3
    cdef const double[:, :, ::1] Pm = P3
    cdef const double[:, :, :, ::1] Vm = V3
    cdef const double[:, :, ::1] Hm = H3
    cdef const long[:, ::1] Om = offs3
    with nogil:
        total = _pair_sum3(Fm, Pm, Vm, Hm, Om, expo, d_min, d_max)
    return 2.0 * total * h ** (2 * n)
