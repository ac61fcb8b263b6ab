# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-draw sum-to-zero kernels.

Same contract as ``_kernels_py``.  With the closed-form basis, column ``a``
(1-based) is ``c_a`` on rows ``1..a`` and ``-a c_a`` on row ``a+1``, so
``M^T D M`` and ``M^T d`` only need prefix sums of ``d``: O(K^2) assembly
instead of O(K^3), followed by an in-place Cholesky.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double JITTER_SCALE = 1e-12


cdef void _assemble(const double* dn, Py_ssize_t K, const double* c,
                    double* prefix, double* v, double* omega) noexcept nogil:
    # omega is (K-1) x (K-1), row-major; only the lower triangle is filled
    cdef Py_ssize_t m = K - 1, a, b
    cdef double s = 0.0, da1
    for a in range(K):
        s += dn[a]
        prefix[a] = s
    for a in range(m):
        # 0-based column a is 1-based column a+1: rows 0..a hold c, row a+1 holds -(a+1) c
        v[a] = c[a] * (prefix[a] - (a + 1) * dn[a + 1])
    for a in range(m):
        da1 = dn[a + 1]
        omega[a * m + a] = c[a] * c[a] * (prefix[a] + (a + 1.0) * (a + 1.0) * da1) - v[a] * v[a] / s
        for b in range(a + 1, m):
            omega[b * m + a] = v[a] * c[b] - v[a] * v[b] / s


cdef int _cholesky(double* A, Py_ssize_t m) noexcept nogil:
    # in-place lower Cholesky on the lower triangle; returns 0 on success
    cdef Py_ssize_t i, j, k
    cdef double acc
    for j in range(m):
        acc = A[j * m + j]
        for k in range(j):
            acc -= A[j * m + k] * A[j * m + k]
        if not acc > 0.0:
            return 1
        acc = sqrt(acc)
        A[j * m + j] = acc
        for i in range(j + 1, m):
            for k in range(j):
                A[i * m + j] -= A[i * m + k] * A[j * m + k]
            A[i * m + j] /= acc
    return 0


cdef int _factor_row(const double* d, Py_ssize_t K, bint compensate, const double* c,
                     double* dn, double* prefix, double* v, double* omega,
                     double* scale_out) noexcept nogil:
    cdef Py_ssize_t m = K - 1, k
    cdef double dmax = d[0], tr, jitter
    cdef int status = 0
    for k in range(1, K):
        if d[k] > dmax:
            dmax = d[k]
    for k in range(K):
        dn[k] = d[k] / dmax
    _assemble(dn, K, c, prefix, v, omega)
    if _cholesky(omega, m) != 0:
        _assemble(dn, K, c, prefix, v, omega)
        tr = 0.0
        for k in range(m):
            tr += omega[k * m + k]
        jitter = JITTER_SCALE * tr / m
        for k in range(m):
            omega[k * m + k] += jitter
        status = 2 if _cholesky(omega, m) != 0 else 1
    scale_out[0] = dmax * (K / (K - 1.0) if compensate else 1.0)
    return status


cdef double* _basis_coeffs(Py_ssize_t K) noexcept nogil:
    cdef double* c = <double*> malloc((K - 1) * sizeof(double))
    cdef Py_ssize_t a
    if c != NULL:
        for a in range(K - 1):
            c[a] = 1.0 / sqrt((a + 1.0) * (a + 2.0))
    return c


def sum_zero_draws(d, z, bint compensate=True):
    """Draw ``M L z`` for a separate diagonal ``D = diag(d[i])`` on each row.

    Returns ``(beta, status)``; status 0 ok, 1 jitter used, 2 Cholesky failed.
    """
    cdef const double[:, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0], K = dv.shape[1]
    if K < 2:
        raise ValueError(f"d must have shape (n, K) with K >= 2, got {(n, K)}")
    if zv.shape[0] != n or zv.shape[1] != K - 1:
        raise ValueError(f"z must have shape {(n, K - 1)}, got {(zv.shape[0], zv.shape[1])}")
    beta = np.empty((n, K), dtype=np.float64)
    status = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] bv = beta
    cdef cnp.int8_t[::1] sv = status
    cdef Py_ssize_t m = K - 1, i, a, k
    cdef double scale, root, acc, tail
    cdef double* c = _basis_coeffs(K)
    cdef double* work = <double*> malloc((3 * K + m * m + m) * sizeof(double))
    if c == NULL or work == NULL:
        free(c)
        free(work)
        raise MemoryError()
    cdef double* dn = work
    cdef double* prefix = work + K
    cdef double* v = work + 2 * K
    cdef double* w = work + 3 * K
    cdef double* omega = work + 3 * K + m
    try:
        with nogil:
            for i in range(n):
                sv[i] = _factor_row(&dv[i, 0], K, compensate, c, dn, prefix, v, omega, &scale)
                if sv[i] == 2:
                    for k in range(K):
                        bv[i, k] = 0.0
                    continue
                for a in range(m):
                    acc = 0.0
                    for k in range(a + 1):
                        acc = acc + omega[a * m + k] * zv[i, k]
                    w[a] = acc
                # beta_k = sum_{a >= k} c_a w_a - k c_{k-1} w_{k-1}   (0-based k)
                root = sqrt(scale)
                tail = 0.0
                for k in range(K - 1, -1, -1):
                    acc = tail
                    if k >= 1:
                        acc = acc - k * c[k - 1] * w[k - 1]
                    bv[i, k] = root * acc
                    if k >= 1:
                        tail = tail + c[k - 1] * w[k - 1]
    finally:
        free(c)
        free(work)
    return beta, status


def sum_zero_factor(d, bint compensate=True):
    """Reduced Cholesky factor for a single diagonal ``d``; returns ``(L, status)``."""
    cdef const double[::1] dv = np.ascontiguousarray(np.reshape(d, -1), dtype=np.float64)
    cdef Py_ssize_t K = dv.shape[0]
    if K < 2:
        raise ValueError("need K >= 2")
    cdef Py_ssize_t m = K - 1, a, b
    cdef double scale
    cdef int st
    L = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] Lv = L
    cdef double* c = _basis_coeffs(K)
    cdef double* work = <double*> malloc((3 * K + m * m) * sizeof(double))
    if c == NULL or work == NULL:
        free(c)
        free(work)
        raise MemoryError()
    try:
        st = _factor_row(&dv[0], K, compensate, c, work, work + K, work + 2 * K,
                         work + 3 * K, &scale)
        for a in range(m):
            for b in range(a + 1):
                Lv[a, b] = work[3 * K + a * m + b] * sqrt(scale)
    finally:
        free(c)
        free(work)
    return L, st
