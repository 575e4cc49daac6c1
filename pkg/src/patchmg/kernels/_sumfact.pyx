# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sum-factorization kernels; see _numpy.py for the contract."""

import numpy as np

from scipy.linalg.cython_blas cimport dgemm


cdef inline void gemm_rm(char ta, char tb, int m, int n, int k,
                         double alpha, double* a, int lda,
                         double* b, int ldb,
                         double beta, double* c) noexcept nogil:
    """Row-major C(m,n) = alpha*op(A)(m,k) @ op(B)(k,n) + beta*C.

    lda/ldb are the stored row lengths of A and B; computed as the
    transposed product in Fortran order.
    """
    dgemm(&tb, &ta, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &n)


cdef inline void gather_cell(const int* idx, int nloc, const double* x,
                             double* u) noexcept nogil:
    cdef int i
    for i in range(nloc):
        u[i] = x[idx[i]] if idx[i] >= 0 else 0.0


cdef inline void scatter_cell(const int* idx, int nloc, const double* u,
                              double* y) noexcept nogil:
    cdef int i
    for i in range(nloc):
        if idx[i] >= 0:
            y[idx[i]] += u[i]


def apply_poisson_cells(double[:, ::1] values, double[:, ::1] derivs,
                        double[:, :, ::1] geo, int[::1] cell_ids,
                        int[:, ::1] gather, int[:, ::1] scatter,
                        double[::1] x, double[::1] y):
    cdef int n = values.shape[0], q = values.shape[1]
    cdef int ngeo = geo.shape[2]
    if ngeo != 3 and ngeo != 6:
        raise ValueError("geo must pack 3 (2D) or 6 (3D) coefficient entries")
    cdef int d = 2 if ngeo == 3 else 3
    cdef int nc = cell_ids.shape[0]
    cdef int nloc = gather.shape[1]
    cdef int nq = geo.shape[1]
    cdef int s = n if n > q else q
    cdef int scube = s * s * s if d == 3 else s * s
    work_arr = np.empty(12 * scube, dtype=np.float64)
    cdef double[::1] work = work_arr
    cdef double* V = &values[0, 0]
    cdef double* D = &derivs[0, 0]
    cdef double* u = &work[0]
    cdef double* t1 = u + scube
    cdef double* td = t1 + scube
    cdef double* t2 = td + scube
    cdef double* t2d = t2 + scube
    cdef double* t3 = t2d + scube
    cdef double* g0 = t3 + scube
    cdef double* g1 = g0 + scube
    cdef double* g2 = g1 + scube
    cdef double* e = g2 + scube
    cdef double* f = e + scube
    cdef double* out = f + scube
    cdef double* G
    cdef int c, z, p, cell
    cdef double a0, a1, a2
    for c in range(nc):
        cell = cell_ids[c]
        gather_cell(&gather[c, 0], nloc, &x[0], u)
        G = &geo[cell, 0, 0]
        if d == 2:
            gemm_rm(b'N', b'N', n, q, n, 1.0, u, n, V, q, 0.0, t1)
            gemm_rm(b'N', b'N', n, q, n, 1.0, u, n, D, q, 0.0, td)
            gemm_rm(b'T', b'N', q, q, n, 1.0, V, q, td, q, 0.0, g0)
            gemm_rm(b'T', b'N', q, q, n, 1.0, D, q, t1, q, 0.0, g1)
            for p in range(nq):
                a0 = g0[p]
                a1 = g1[p]
                g0[p] = G[3 * p] * a0 + G[3 * p + 1] * a1
                g1[p] = G[3 * p + 1] * a0 + G[3 * p + 2] * a1
            gemm_rm(b'N', b'N', n, q, q, 1.0, V, q, g0, q, 0.0, e)
            gemm_rm(b'N', b'N', n, q, q, 1.0, D, q, g1, q, 0.0, f)
            gemm_rm(b'N', b'T', n, n, q, 1.0, e, q, D, q, 0.0, out)
            gemm_rm(b'N', b'T', n, n, q, 1.0, f, q, V, q, 1.0, out)
        else:
            gemm_rm(b'N', b'N', n * n, q, n, 1.0, u, n, V, q, 0.0, t1)
            gemm_rm(b'N', b'N', n * n, q, n, 1.0, u, n, D, q, 0.0, td)
            for z in range(n):
                gemm_rm(b'T', b'N', q, q, n, 1.0, V, q, t1 + z * n * q, q, 0.0, t2 + z * q * q)
                gemm_rm(b'T', b'N', q, q, n, 1.0, D, q, t1 + z * n * q, q, 0.0, t2d + z * q * q)
                gemm_rm(b'T', b'N', q, q, n, 1.0, V, q, td + z * n * q, q, 0.0, t3 + z * q * q)
            gemm_rm(b'T', b'N', q, q * q, n, 1.0, V, q, t3, q * q, 0.0, g0)
            gemm_rm(b'T', b'N', q, q * q, n, 1.0, V, q, t2d, q * q, 0.0, g1)
            gemm_rm(b'T', b'N', q, q * q, n, 1.0, D, q, t2, q * q, 0.0, g2)
            for p in range(nq):
                a0 = g0[p]
                a1 = g1[p]
                a2 = g2[p]
                g0[p] = G[6 * p] * a0 + G[6 * p + 1] * a1 + G[6 * p + 2] * a2
                g1[p] = G[6 * p + 1] * a0 + G[6 * p + 3] * a1 + G[6 * p + 4] * a2
                g2[p] = G[6 * p + 2] * a0 + G[6 * p + 4] * a1 + G[6 * p + 5] * a2
            gemm_rm(b'N', b'N', n, q * q, q, 1.0, V, q, g0, q * q, 0.0, t1)
            gemm_rm(b'N', b'N', n, q * q, q, 1.0, V, q, g1, q * q, 0.0, td)
            gemm_rm(b'N', b'N', n, q * q, q, 1.0, D, q, g2, q * q, 0.0, t2)
            for z in range(n):
                gemm_rm(b'N', b'N', n, q, q, 1.0, V, q, t1 + z * q * q, q, 0.0, e + z * n * q)
                gemm_rm(b'N', b'N', n, q, q, 1.0, D, q, td + z * q * q, q, 0.0, f + z * n * q)
                gemm_rm(b'N', b'N', n, q, q, 1.0, V, q, t2 + z * q * q, q, 1.0, f + z * n * q)
            gemm_rm(b'N', b'T', n * n, n, q, 1.0, e, q, D, q, 0.0, out)
            gemm_rm(b'N', b'T', n * n, n, q, 1.0, f, q, V, q, 1.0, out)
        scatter_cell(&scatter[c, 0], nloc, out, &y[0])


def contract_cells(mats, int[:, ::1] gather, int[:, ::1] scatter,
                   double[::1] x, double[::1] y):
    cdef int d = len(mats)
    if d != 2 and d != 3:
        raise ValueError("contract_cells takes 2 or 3 per-axis matrices")
    cdef double[:, ::1] m0 = mats[0]
    cdef double[:, ::1] m1 = mats[1]
    cdef double[:, ::1] m2 = mats[2] if d == 3 else mats[0]
    cdef int nc = gather.shape[0]
    cdef int nin = gather.shape[1], nout = scatter.shape[1]
    cdef int o0 = m0.shape[0], i0 = m0.shape[1]
    cdef int o1 = m1.shape[0], i1 = m1.shape[1]
    cdef int o2 = m2.shape[0] if d == 3 else 1
    cdef int i2 = m2.shape[1] if d == 3 else 1
    cdef int cap = max(i0, o0) * max(i1, o1) * max(i2, o2)
    work_arr = np.empty(2 * cap, dtype=np.float64)
    cdef double[::1] work = work_arr
    cdef double* a = &work[0]
    cdef double* b = a + cap
    cdef int c, z
    for c in range(nc):
        gather_cell(&gather[c, 0], nin, &x[0], a)
        # axis x: (i2*i1, i0) @ m0^T -> (i2*i1, o0)
        gemm_rm(b'N', b'T', i2 * i1, o0, i0, 1.0, a, i0, &m0[0, 0], i0, 0.0, b)
        if d == 2:
            gemm_rm(b'N', b'N', o1, o0, i1, 1.0, &m1[0, 0], i1, b, o0, 0.0, a)
        else:
            for z in range(i2):
                gemm_rm(b'N', b'N', o1, o0, i1, 1.0, &m1[0, 0], i1,
                        b + z * i1 * o0, o0, 0.0, a + z * o1 * o0)
            gemm_rm(b'N', b'N', o2, o1 * o0, i2, 1.0, &m2[0, 0], i2, a, o1 * o0, 0.0, b)
        scatter_cell(&scatter[c, 0], nout, b if d == 3 else a, &y[0])
