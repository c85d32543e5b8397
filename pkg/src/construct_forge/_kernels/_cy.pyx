# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled PLS hot loops; same contracts as ``_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double SINGULAR_EPS = 1e-12


def weighted_corr(X, counts):
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.int64_t[::1] c = np.ascontiguousarray(counts, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], p = x.shape[1], i, a, b
    cdef double total = 0.0, ci, da
    mean_arr = np.zeros(p)
    cov_arr = np.zeros((p, p))
    cdef double[::1] mean = mean_arr
    cdef double[:, ::1] cov = cov_arr
    cdef double *d = <double *> malloc(p * sizeof(double))
    with nogil:
        for i in range(n):
            if c[i] == 0:
                continue
            ci = <double> c[i]
            total += ci
            for a in range(p):
                mean[a] += ci * x[i, a]
        for a in range(p):
            mean[a] /= total
        for i in range(n):
            if c[i] == 0:
                continue
            ci = <double> c[i]
            for a in range(p):
                d[a] = x[i, a] - mean[a]
            for a in range(p):
                da = ci * d[a]
                for b in range(a, p):
                    cov[a, b] += da * d[b]
    free(d)
    sd_arr = np.empty(p)
    cdef double[::1] sd = sd_arr
    cdef bint degenerate = False
    for a in range(p):
        cov[a, a] /= (total - 1.0)
        if cov[a, a] <= 0.0:
            degenerate = True
            sd[a] = 0.0
        else:
            sd[a] = sqrt(cov[a, a])
    if degenerate:
        return None, sd_arr
    for a in range(p):
        for b in range(a + 1, p):
            cov[a, b] = cov[a, b] / (total - 1.0) / (sd[a] * sd[b])
            cov[b, a] = cov[a, b]
        cov[a, a] = 1.0
    return cov_arr, sd_arr


cdef int _chol_solve(double *A, double *rhs, int m) noexcept nogil:
    """Solve A x = rhs in place (A is m x m SPD, row-major); 1 if singular."""
    cdef int i, j, k
    cdef double s
    for j in range(m):
        s = A[j * m + j]
        for k in range(j):
            s -= A[j * m + k] * A[j * m + k]
        if s < SINGULAR_EPS:
            return 1
        A[j * m + j] = sqrt(s)
        for i in range(j + 1, m):
            s = A[i * m + j]
            for k in range(j):
                s -= A[i * m + k] * A[j * m + k]
            A[i * m + j] = s / A[j * m + j]
    for i in range(m):
        s = rhs[i]
        for k in range(i):
            s -= A[i * m + k] * rhs[k]
        rhs[i] = s / A[i * m + i]
    for i in range(m - 1, -1, -1):
        s = rhs[i]
        for k in range(i + 1, m):
            s -= A[k * m + i] * rhs[k]
        rhs[i] = s / A[i * m + i]
    return 0


cdef int _normalize(double[:, ::1] R, double *w, cnp.int64_t[::1] starts, int K) noexcept nogil:
    cdef int j
    cdef Py_ssize_t a, b, lo, hi
    cdef double var, s, scale
    for j in range(K):
        lo = starts[j]
        hi = starts[j + 1]
        var = 0.0
        for a in range(lo, hi):
            s = 0.0
            for b in range(lo, hi):
                s += R[a, b] * w[b]
            var += w[a] * s
        if var <= 0.0:
            return 2
        scale = 1.0 / sqrt(var)
        s = 0.0
        for b in range(lo, hi):
            w[b] *= scale
            s += R[lo, b] * w[b]
        if s < 0.0:
            for b in range(lo, hi):
                w[b] = -w[b]
    return 0


cdef int _iterate(double[:, ::1] R, cnp.int64_t[::1] starts, cnp.int8_t[:, ::1] adj,
                  int K, int scheme, double *w, double *w_new, double *P, double *RW,
                  double *E, double *A, double *rhs, int *idx) noexcept nogil:
    cdef Py_ssize_t p = R.shape[0], a, b
    cdef int i, j, k, m, status
    cdef double s
    # RW[a, j] = sum_{b in block j} R[a, b] w[b]
    for a in range(p):
        for j in range(K):
            s = 0.0
            for b in range(starts[j], starts[j + 1]):
                s += R[a, b] * w[b]
            RW[a * K + j] = s
    for i in range(K):
        for j in range(K):
            s = 0.0
            for a in range(starts[i], starts[i + 1]):
                s += w[a] * RW[a * K + j]
            P[i * K + j] = s
    for i in range(K * K):
        E[i] = 0.0
    for j in range(K):
        if scheme == 0:
            m = 0
            for i in range(K):
                if adj[i, j]:
                    idx[m] = i
                    m += 1
            if m > 0:
                for i in range(m):
                    rhs[i] = P[idx[i] * K + j]
                    for k in range(m):
                        A[i * m + k] = P[idx[i] * K + idx[k]]
                if _chol_solve(A, rhs, m):
                    return 1
                for i in range(m):
                    E[idx[i] * K + j] = rhs[i]
            for i in range(K):
                if adj[j, i]:
                    E[i * K + j] = P[i * K + j]
        else:
            for i in range(K):
                if adj[i, j] or adj[j, i]:
                    s = P[i * K + j]
                    if scheme == 1:
                        E[i * K + j] = 1.0 if s > 0 else (-1.0 if s < 0 else 0.0)
                    else:
                        E[i * K + j] = s
    for j in range(K):
        for a in range(starts[j], starts[j + 1]):
            s = 0.0
            for i in range(K):
                s += RW[a * K + i] * E[i * K + j]
            w_new[a] = s
    return _normalize(R, w_new, starts, K)


def outer_loop(R, starts, adj, int scheme, int max_iter, double tol):
    cdef double[:, ::1] r = np.ascontiguousarray(R, dtype=np.float64)
    cdef cnp.int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef cnp.int8_t[:, ::1] ad = np.ascontiguousarray(adj, dtype=np.int8)
    cdef int K = st.shape[0] - 1
    cdef Py_ssize_t p = r.shape[0], a
    w_arr = np.ones(p)
    cdef double[::1] w = w_arr
    cdef double *w_new = <double *> malloc(p * sizeof(double))
    cdef double *P = <double *> malloc(K * K * sizeof(double))
    cdef double *RW = <double *> malloc(p * K * sizeof(double))
    cdef double *E = <double *> malloc(K * K * sizeof(double))
    cdef double *A = <double *> malloc(K * K * sizeof(double))
    cdef double *rhs = <double *> malloc(K * sizeof(double))
    cdef int *idx = <int *> malloc(K * sizeof(int))
    cdef int it = 0, status = 0
    cdef bint converged = False
    cdef double delta, diff
    with nogil:
        status = _normalize(r, &w[0], st, K)
        if status == 0:
            while it < max_iter:
                it += 1
                status = _iterate(r, st, ad, K, scheme, &w[0], w_new, P, RW, E, A, rhs, idx)
                if status != 0:
                    break
                delta = 0.0
                for a in range(p):
                    diff = fabs(w_new[a] - w[a])
                    if diff > delta:
                        delta = diff
                    w[a] = w_new[a]
                if delta < tol:
                    converged = True
                    break
    free(w_new); free(P); free(RW); free(E); free(A); free(rhs); free(idx)
    if status == 2 and it == 0:
        return np.zeros(p), 0, False, 2
    return w_arr, it, converged, status
