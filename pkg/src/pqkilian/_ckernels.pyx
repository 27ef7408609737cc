# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled measurement kernels; semantics match pqkilian._pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double DEGENERATE = 1e-12


cdef inline double _clip(double p) nogil:
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


cdef int _collapse(double complex[::1] x, double complex[::1] y, Py_ssize_t n,
                   double p1, double uni, cnp.int8_t *bit) nogil:
    """Replace x by the selected normalised branch; return 0 or -1 on degeneracy."""
    cdef Py_ssize_t i
    cdef double s
    if uni < p1:
        bit[0] = 1
        if p1 < DEGENERATE:
            return -1
        s = 1.0 / sqrt(p1)
        for i in range(n):
            x[i] = y[i] * s
    else:
        bit[0] = 0
        if 1.0 - p1 < DEGENERATE:
            return -1
        s = 1.0 / sqrt(1.0 - p1)
        for i in range(n):
            x[i] = (x[i] - y[i]) * s
    return 0


def dense_alternate(double complex[:, ::1] PA, double complex[:, ::1] PB,
                    v_in, double[::1] uniforms):
    cdef Py_ssize_t D = PA.shape[0]
    cdef Py_ssize_t T = uniforms.shape[0]
    cdef Py_ssize_t i, a, b
    cdef double complex acc
    cdef double p1
    cdef double complex[:, ::1] P
    out = np.array(v_in, dtype=np.complex128)
    ybuf = np.empty(D, dtype=np.complex128)
    bits_arr = np.zeros(T, dtype=np.int8)
    cdef double complex[::1] v = out
    cdef double complex[::1] y = ybuf
    cdef cnp.int8_t[::1] bits = bits_arr
    cdef cnp.int8_t bit
    cdef int bad
    for i in range(T):
        P = PA if i % 2 == 0 else PB
        p1 = 0.0
        with nogil:
            for a in range(D):
                acc = 0
                for b in range(D):
                    acc = acc + P[a, b] * v[b]
                y[a] = acc
                p1 += acc.real * acc.real + acc.imag * acc.imag
            bad = _collapse(v, y, D, _clip(p1), uniforms[i], &bit)
        bits[i] = bit
        if bad < 0:
            return bits_arr, out, i
    return bits_arr, out, -1


def workspace_alternate(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                        double complex[::1] data, double complex[::1] u,
                        X_in, Py_ssize_t d, Py_ssize_t n_pairs, bint stop_on_plus,
                        double[::1] uniforms):
    cdef Py_ssize_t nb = u.shape[0]
    cdef Py_ssize_t K = nb * d
    cdef Py_ssize_t k, row, j, c, a
    cdef Py_ssize_t steps = 0
    cdef double complex acc
    cdef double p1
    cdef int status = 0
    out = np.array(X_in, dtype=np.complex128)
    ybuf = np.empty(K, dtype=np.complex128)
    phibuf = np.empty(d, dtype=np.complex128)
    bits_arr = np.zeros(2 * n_pairs, dtype=np.int8)
    cdef double complex[::1] X = out
    cdef double complex[::1] y = ybuf
    cdef double complex[::1] phi = phibuf
    cdef cnp.int8_t[::1] bits = bits_arr
    cdef cnp.int8_t bit
    with nogil:
        for k in range(n_pairs):
            # block projector G
            p1 = 0.0
            for row in range(K):
                acc = 0
                for j in range(indptr[row], indptr[row + 1]):
                    acc = acc + data[j] * X[indices[j]]
                y[row] = acc
                p1 += acc.real * acc.real + acc.imag * acc.imag
            if _collapse(X, y, K, _clip(p1), uniforms[steps], &bit) < 0:
                bits[steps] = bit
                status = 1
                break
            bits[steps] = bit
            steps += 1
            # |u><u| on the branch register
            for a in range(d):
                phi[a] = 0
            for c in range(nb):
                for a in range(d):
                    phi[a] = phi[a] + u[c].conjugate() * X[c * d + a]
            p1 = 0.0
            for a in range(d):
                p1 += phi[a].real * phi[a].real + phi[a].imag * phi[a].imag
            for c in range(nb):
                for a in range(d):
                    y[c * d + a] = u[c] * phi[a]
            if _collapse(X, y, K, _clip(p1), uniforms[steps], &bit) < 0:
                bits[steps] = bit
                status = 1
                break
            bits[steps] = bit
            steps += 1
            if stop_on_plus and bit == 1:
                break
    if status:
        return bits_arr[:steps], out, steps, steps
    return bits_arr[:steps], out, steps, -1
