# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-split search for weighted depth-1 boosting.

Mirrors ``_split_py.best_split`` operation for operation, so both
backends return bit-identical results.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def best_split(const double[:, ::1] vals, const cnp.int64_t[:, ::1] order,
               const double[::1] g, const double[::1] h, double min_child):
    cdef Py_ssize_t d = vals.shape[0]
    cdef Py_ssize_t n = vals.shape[1]
    cdef Py_ssize_t f, k
    cdef double G, H, GL, HL, GR, HR, gain
    cdef double best = 0.0
    cdef Py_ssize_t best_f = -1, best_k = -1
    cdef cnp.int64_t idx

    for f in range(d):
        G = 0.0
        H = 0.0
        for k in range(n):
            idx = order[f, k]
            G = G + g[idx]
            H = H + h[idx]
        GL = 0.0
        HL = 0.0
        for k in range(n - 1):
            idx = order[f, k]
            GL = GL + g[idx]
            HL = HL + h[idx]
            if not (vals[f, k] < vals[f, k + 1]):
                continue
            GR = G - GL
            HR = H - HL
            if HL < min_child or HR < min_child:
                continue
            gain = GL * GL / HL + GR * GR / HR - G * G / H
            if gain > best:
                best = gain
                best_f = f
                best_k = k
    return best_f, best_k, best
