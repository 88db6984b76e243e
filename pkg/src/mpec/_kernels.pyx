# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; same contracts as ``mpec._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


def cnot_layer(uint64_t[:, ::1] x, uint64_t[:, ::1] z, int64_t[::1] ctrl, int64_t[::1] tgt):
    cdef Py_ssize_t i, w, c, t
    cdef Py_ssize_t nw = x.shape[1]
    with nogil:
        for i in range(ctrl.shape[0]):
            c = ctrl[i]
            t = tgt[i]
            for w in range(nw):
                x[t, w] ^= x[c, w]
                z[c, w] ^= z[t, w]


def xor_scatter(uint64_t[:, ::1] plane, int64_t[::1] rows, int64_t[::1] words, uint64_t[::1] bits):
    cdef Py_ssize_t i
    with nogil:
        for i in range(rows.shape[0]):
            plane[rows[i], words[i]] ^= bits[i]


cdef inline int popcount9(int64_t m) nogil:
    cdef int n = 0
    while m:
        m &= m - 1
        n += 1
    return n


def match_batch(int64_t[::1] syndromes, int64_t[::1] offsets, int64_t[::1] incidence,
                int64_t[::1] masks, int max_size=3):
    cdef Py_ssize_t n = syndromes.shape[0]
    corr_arr = np.zeros(n, dtype=np.int64)
    size_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] corr = corr_arr
    cdef int64_t[::1] size = size_arr
    cdef Py_ssize_t j, lo, hi, a, b, c
    cdef int64_t s, m, best_mask
    cdef int best, nc
    with nogil:
        for j in range(n):
            s = syndromes[j]
            lo = offsets[j]
            hi = offsets[j + 1]
            # size 1
            best = -1
            for a in range(lo, hi):
                if incidence[a] and incidence[a] == s:
                    nc = popcount9(masks[a])
                    if best < 0 or nc < best:
                        best = nc
                        best_mask = masks[a]
            if best >= 0:
                corr[j] = best_mask
                size[j] = 1
                continue
            if max_size < 2:
                continue
            for a in range(lo, hi):
                if not incidence[a]:
                    continue
                for b in range(a + 1, hi):
                    if incidence[b] and (incidence[a] ^ incidence[b]) == s:
                        m = masks[a] ^ masks[b]
                        nc = popcount9(m)
                        if best < 0 or nc < best:
                            best = nc
                            best_mask = m
            if best >= 0:
                corr[j] = best_mask
                size[j] = 2
                continue
            if max_size < 3:
                continue
            for a in range(lo, hi):
                if not incidence[a]:
                    continue
                for b in range(a + 1, hi):
                    if not incidence[b]:
                        continue
                    for c in range(b + 1, hi):
                        if incidence[c] and (incidence[a] ^ incidence[b] ^ incidence[c]) == s:
                            m = masks[a] ^ masks[b] ^ masks[c]
                            nc = popcount9(m)
                            if best < 0 or nc < best:
                                best = nc
                                best_mask = m
            if best >= 0:
                corr[j] = best_mask
                size[j] = 3
    return corr_arr, size_arr
