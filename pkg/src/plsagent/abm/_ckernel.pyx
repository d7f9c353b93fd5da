# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled activation kernel; must match ``_pykernel`` bit for bit."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def step(const cnp.int64_t[::1] order,
         const double[::1] u_hum,
         const double[::1] u_learn,
         const double[::1] p_hum,
         const double[::1] p_learn_h,
         const double[::1] p_learn_n,
         const cnp.uint8_t[::1] coop_ok,
         const cnp.int32_t[:, ::1] nbr,
         cnp.uint8_t[::1] learned,
         cnp.uint8_t[::1] humanized,
         cnp.uint8_t[::1] att_hum,
         cnp.uint8_t[::1] att_learn):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t k, i, d
    cdef cnp.int32_t j
    cdef double p
    cdef long changes = 0
    with nogil:
        for k in range(n):
            i = order[k]
            if not att_hum[i]:
                att_hum[i] = 1
                changes += 1
                if u_hum[i] < p_hum[i]:
                    humanized[i] = 1
                    changes += 1
            if not att_learn[i]:
                att_learn[i] = 1
                changes += 1
                p = p_learn_h[i] if humanized[i] else p_learn_n[i]
                if u_learn[i] < p and not learned[i]:
                    learned[i] = 1
                    changes += 1
            if coop_ok[i]:
                for d in range(4):
                    j = nbr[i, d]
                    if j >= 0 and coop_ok[j] and learned[i] != learned[j]:
                        learned[i] = 1
                        learned[j] = 1
                        changes += 1
    return changes


def frontier(const cnp.int32_t[:, ::1] nbr,
             const cnp.uint8_t[::1] coop_ok,
             const cnp.uint8_t[::1] learned):
    cdef Py_ssize_t n = nbr.shape[0]
    cdef Py_ssize_t i, d
    cdef cnp.int32_t j
    cdef long count = 0
    with nogil:
        for i in range(n):
            if not coop_ok[i]:
                continue
            for d in range(4):
                j = nbr[i, d]
                if j > i and coop_ok[j] and learned[i] != learned[j]:
                    count += 1
    return count
