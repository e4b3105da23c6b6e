# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; see ``_pykernels`` for the contracts."""
import numpy as np

from libc.stdint cimport uint64_t


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def wht_inplace(double[::1] a):
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef double x, y
    if size & (size - 1):
        raise ValueError(f"length {size} is not a power of two")
    with nogil:
        while h < size:
            i = 0
            while i < size:
                for j in range(i, i + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                i += 2 * h
            h *= 2


def span_images(gens):
    cdef const uint64_t[::1] g = np.ascontiguousarray(gens, dtype=np.uint64)
    cdef Py_ssize_t k = g.shape[0]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << k
    out_arr = np.empty(size, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef Py_ssize_t i, m, half
    out[0] = 0
    with nogil:
        for i in range(k):
            half = (<Py_ssize_t>1) << i
            for m in range(half):
                out[half + m] = out[m] ^ g[i]
    return out_arr


def popcount(x):
    cdef const uint64_t[::1] v = np.ascontiguousarray(x, dtype=np.uint64)
    cdef Py_ssize_t size = v.shape[0], i
    out_arr = np.empty(size, dtype=np.int64)
    cdef long long[::1] out = out_arr
    with nogil:
        for i in range(size):
            out[i] = __builtin_popcountll(v[i])
    return out_arr


def parity_products(z, rows):
    cdef const uint64_t[::1] zv = np.ascontiguousarray(z, dtype=np.uint64)
    cdef const uint64_t[::1] rv = np.ascontiguousarray(rows, dtype=np.uint64)
    cdef Py_ssize_t size = zv.shape[0], nrows = rv.shape[0], i, r
    out_arr = np.zeros(size, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef uint64_t acc
    with nogil:
        for i in range(size):
            acc = 0
            for r in range(nrows):
                acc |= (<uint64_t>(__builtin_popcountll(zv[i] & rv[r]) & 1)) << r
            out[i] = acc
    return out_arr
