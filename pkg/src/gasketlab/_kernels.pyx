# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled inner loops.  Semantics must match ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdint cimport uint64_t
from libcpp.vector cimport vector

cnp.import_array()


def cascade_stage(double[::1] out, unsigned char[::1] filled,
                  const cnp.int64_t[:, ::1] targets, const double[::1] f_vals,
                  const double[:, ::1] alpha, const double[::1] b_vals):
    """One cascade stage; see ``_kernels_py.cascade_stage``."""
    cdef Py_ssize_t n_words = targets.shape[0]
    cdef Py_ssize_t n_src = targets.shape[1]
    cdef Py_ssize_t w, s
    cdef cnp.int64_t t
    cdef double v, d, disc = 0.0
    cdef double[::1] gap = np.empty(n_src)
    for s in range(n_src):
        gap[s] = out[s] - b_vals[s]
    for w in range(n_words):
        for s in range(n_src):
            t = targets[w, s]
            v = f_vals[t] + alpha[w, s] * gap[s]
            if filled[t]:
                d = fabs(out[t] - v)
                if d > disc:
                    disc = d
            else:
                out[t] = v
                filled[t] = 1
    return disc


def count_boxes(const cnp.int64_t[::1] i, const cnp.int64_t[::1] j,
                const cnp.int64_t[::1] k):
    """Number of distinct integer triples ``(i, j, k)``."""
    cdef Py_ssize_t n = i.shape[0], p, distinct = 0
    cdef int bits = 4
    while (1 << bits) < 2 * n:
        bits += 1
    cdef uint64_t mask = (1 << bits) - 1, slot
    cdef cnp.int64_t key
    # open addressing with linear probing; -1 marks an empty slot
    cdef vector[cnp.int64_t] table = vector[cnp.int64_t](1 << bits, -1)
    for p in range(n):
        # 21 bits per axis; the caller checks the vertical index fits
        key = ((i[p] & 0x1FFFFF) << 42) | ((j[p] & 0x1FFFFF) << 21) | (k[p] & 0x1FFFFF)
        slot = (<uint64_t>key * 0x9E3779B97F4A7C15ULL) >> (64 - bits)
        while table[slot] != -1 and table[slot] != key:
            slot = (slot + 1) & mask
        if table[slot] == -1:
            table[slot] = key
            distinct += 1
    return distinct


def cell_ranges(const double[::1] values, const cnp.int64_t[:, ::1] index_map):
    """Row-wise min and max of ``values[index_map]``."""
    cdef Py_ssize_t r, c, n_rows = index_map.shape[0], n_cols = index_map.shape[1]
    cdef double v, lo, hi
    lo_arr = np.empty(n_rows)
    hi_arr = np.empty(n_rows)
    cdef double[::1] lo_v = lo_arr
    cdef double[::1] hi_v = hi_arr
    for r in range(n_rows):
        lo = values[index_map[r, 0]]
        hi = lo
        for c in range(1, n_cols):
            v = values[index_map[r, c]]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
        lo_v[r] = lo
        hi_v[r] = hi
    return lo_arr, hi_arr
