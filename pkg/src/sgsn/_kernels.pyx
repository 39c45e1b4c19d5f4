# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise kernels for the solver hot path.

Must match ``_kernels_py`` elementwise; reduction order may differ.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def threshold_prox(u, theta):
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double th = theta
    cdef Py_ssize_t n = uv.shape[0], i, nt = 0
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        if uv[i] == th:
            nt += 1
        out[i] = uv[i] if uv[i] > th else 0.0
    ties_arr = np.empty(nt, dtype=np.int64)
    cdef long long[::1] ties = ties_arr
    cdef Py_ssize_t j = 0
    if nt > 0:
        for i in range(n):
            if uv[i] == th:
                ties[j] = i
                j += 1
    return out_arr, ties_arr


def indicator_prox(w, theta):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double th = theta
    cdef Py_ssize_t n = wv.shape[0], i, nt = 0
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        if wv[i] == th:
            nt += 1
        out[i] = wv[i] if (wv[i] <= 0.0 or wv[i] > th) else 0.0
    ties_arr = np.empty(nt, dtype=np.int64)
    cdef long long[::1] ties = ties_arr
    cdef Py_ssize_t j = 0
    if nt > 0:
        for i in range(n):
            if wv[i] == th:
                ties[j] = i
                j += 1
    return out_arr, ties_arr


def pg_step(z, grad, tau, theta):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] gv = np.ascontiguousarray(grad, dtype=np.float64)
    cdef double t = tau, th = theta
    cdef Py_ssize_t n = zv.shape[0], i, nk = 0
    cdef double u, d, dist_sq = 0.0
    for i in range(n):
        u = zv[i] - t * gv[i]
        if u > th:
            nk += 1
            d = zv[i] - u
            dist_sq += d * d
        else:
            dist_sq += zv[i] * zv[i]
    idx_arr = np.empty(nk, dtype=np.int64)
    vals_arr = np.empty(nk, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t j = 0
    for i in range(n):
        u = zv[i] - t * gv[i]
        if u > th:
            idx[j] = i
            vals[j] = u
            j += 1
    return idx_arr, vals_arr, dist_sq


def min_ratio_step(v, d):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0], i
    cdef double best = 1.0, r
    for i in range(n):
        if dv[i] < 0.0:
            r = -vv[i] / dv[i]
            if r < best:
                best = r
    return best


def soft_threshold(v, lam):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double l = lam
    cdef Py_ssize_t n = vv.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        if vv[i] > l:
            out[i] = vv[i] - l
        elif vv[i] < -l:
            out[i] = vv[i] + l
        else:
            out[i] = 0.0
    return out_arr


def shrink_quad_value(v, lam):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double l = lam, t, acc = 0.0
    cdef Py_ssize_t n = vv.shape[0], i
    for i in range(n):
        t = vv[i] if vv[i] >= 0.0 else -vv[i]
        t -= l
        if t > 0.0:
            acc += t * t
    return 0.5 * acc


def shrink_jac_diag(v, lam):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double l = lam, a
    cdef Py_ssize_t n = vv.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        a = vv[i] if vv[i] >= 0.0 else -vv[i]
        out[i] = 1.0 if a > l else 0.0
    return out_arr


def setdist_sq_threshold(z, u, theta):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double th = theta, dz, du, acc = 0.0
    cdef Py_ssize_t n = zv.shape[0], i
    for i in range(n):
        dz = zv[i] * zv[i]
        du = (zv[i] - uv[i]) * (zv[i] - uv[i])
        if uv[i] < th:
            acc += dz
        elif uv[i] > th:
            acc += du
        else:
            acc += dz if dz < du else du
    return acc


cdef inline unsigned long long _rotl(unsigned long long x, int k) nogil:
    return (x << k) | (x >> (64 - k))


def xoshiro_fill(state, out):
    cdef unsigned long long[::1] st = state
    cdef unsigned long long[::1] o = out
    cdef unsigned long long s0 = st[0], s1 = st[1], s2 = st[2], s3 = st[3], t
    cdef Py_ssize_t n = o.shape[0], i
    for i in range(n):
        o[i] = _rotl(s1 * 5ULL, 7) * 9ULL
        t = s1 << 17
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    st[0] = s0
    st[1] = s1
    st[2] = s2
    st[3] = s3
