# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``; same semantics."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()

cdef enum:
    OPTIMAL = 0
    UNBOUNDED = 1
    ITERATION_CAP = 2


cdef inline Py_ssize_t _find(const int64_t[::1] keys, int64_t key) nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < keys.shape[0] and keys[lo] == key:
        return lo
    return -1


def convex_triples(nums_in, keys_in, key_ids_in, pows_in, int64_t offset, int j,
                   Py_ssize_t row_start, Py_ssize_t row_stop):
    cdef const int64_t[:, ::1] nums = np.ascontiguousarray(nums_in, dtype=np.int64)
    cdef const int64_t[::1] keys = np.ascontiguousarray(keys_in, dtype=np.int64)
    cdef const int64_t[::1] key_ids = np.ascontiguousarray(key_ids_in, dtype=np.int64)
    cdef const int64_t[::1] pows = np.ascontiguousarray(pows_in, dtype=np.int64)
    cdef Py_ssize_t n = nums.shape[0], d = nums.shape[1]
    cdef int64_t full = (<int64_t>1) << j
    cdef int64_t mask = full - 1
    cdef Py_ssize_t cap = (row_stop - row_start) * n * (full + 1)
    if cap < 0:
        cap = 0
    out_x_arr = np.empty(cap, dtype=np.int64)
    out_y_arr = np.empty(cap, dtype=np.int64)
    out_a_arr = np.empty(cap, dtype=np.int64)
    out_c_arr = np.empty(cap, dtype=np.int64)
    cdef int64_t[::1] out_x = out_x_arr
    cdef int64_t[::1] out_y = out_y_arr
    cdef int64_t[::1] out_a = out_a_arr
    cdef int64_t[::1] out_c = out_c_arr
    cdef Py_ssize_t x, y, c, count = 0, pos
    cdef int64_t a, v, key
    cdef bint ok
    with nogil:
        for x in range(row_start, row_stop):
            for y in range(n):
                for a in range(full + 1):
                    ok = True
                    key = 0
                    for c in range(d):
                        v = a * nums[x, c] + (full - a) * nums[y, c]
                        if v & mask:
                            ok = False
                            break
                        key = key + ((v >> j) + offset) * pows[c]
                    if not ok:
                        continue
                    pos = _find(keys, key)
                    if pos < 0:
                        continue
                    out_x[count] = x
                    out_y[count] = y
                    out_a[count] = a
                    out_c[count] = key_ids[pos]
                    count += 1
    return (out_x_arr[:count].copy(), out_y_arr[:count].copy(),
            out_a_arr[:count].copy(), out_c_arr[:count].copy())


def simplex_iterate(double[:, ::1] T, int64_t[::1] basis, long max_iter,
                    long bland_after, double tol, long it0=0):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t ncols = T.shape[1] - 1
    cdef Py_ssize_t i, k, e, r
    cdef long it = it0
    cdef int status = OPTIMAL
    cdef double best, ratio, piv, factor, cmin
    cdef int64_t bidx
    with nogil:
        while True:
            e = -1
            if it < bland_after:
                cmin = T[m, 0]
                e = 0
                for k in range(1, ncols):
                    if T[m, k] < cmin:
                        cmin = T[m, k]
                        e = k
                if not (cmin < -tol):
                    status = OPTIMAL
                    break
            else:
                for k in range(ncols):
                    if T[m, k] < -tol:
                        e = k
                        break
                if e < 0:
                    status = OPTIMAL
                    break
            if it >= max_iter:
                status = ITERATION_CAP
                break
            r = -1
            best = 0.0
            for i in range(m):
                if T[i, e] > tol:
                    ratio = T[i, ncols] / T[i, e]
                    if r < 0 or ratio < best:
                        best = ratio
                        r = i
            if r < 0:
                status = UNBOUNDED
                break
            bidx = -1
            r = -1
            for i in range(m):
                if T[i, e] > tol:
                    ratio = T[i, ncols] / T[i, e]
                    if ratio <= best + 1e-12:
                        if it < bland_after:
                            if r < 0 or T[i, e] > T[r, e]:
                                r = i
                        elif r < 0 or basis[i] < bidx:
                            r = i
                            bidx = basis[i]
            piv = T[r, e]
            for k in range(ncols + 1):
                T[r, k] = T[r, k] / piv
            for i in range(m + 1):
                if i == r:
                    continue
                factor = T[i, e]
                for k in range(ncols + 1):
                    T[i, k] = T[i, k] - factor * T[r, k]
            basis[r] = e
            it += 1
    return status, it
