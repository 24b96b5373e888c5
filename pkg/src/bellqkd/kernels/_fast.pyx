# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch kernel.

Single pass over the pre-drawn arrays from ``_tables.draw_batch``; must stay
arithmetically identical to ``_reference.run_batch`` (same cdf lookup rule,
same tie-break), so both backends tally bit-identically.
"""

import numpy as np


def run_batch(draws, land_cdf, decode_bit, partial, n_classes):
    """Tally one batch; see kernels._reference.run_batch for the contract."""
    cdef long long[::1] cls = draws.intensity_class
    cdef long long[::1] a_idx = draws.sender_idx
    cdef long long[::1] b_idx = draws.receiver_idx
    cdef long long[::1] m = draws.survivors
    cdef double[::1] land_u = draws.landing_u
    cdef unsigned char[:, ::1] dark = draws.dark_clicks
    cdef double[::1] tie_u = draws.tie_u
    cdef double[:, ::1] cdf = land_cdf
    cdef long long[:, ::1] decode = decode_bit
    cdef bint part = partial
    cdef int n_cls = n_classes

    sent_arr = np.zeros(n_cls * 2, dtype=np.int64)
    sifted_arr = np.zeros(n_cls * 2, dtype=np.int64)
    errors_arr = np.zeros(n_cls * 2, dtype=np.int64)
    cdef long long[::1] sent = sent_arr
    cdef long long[::1] sifted = sifted_arr
    cdef long long[::1] errors = errors_arr

    cdef Py_ssize_t size = cls.shape[0]
    cdef Py_ssize_t i, p
    cdef long long off = 0, detected = 0
    cdef long long a, b, strat, row
    cdef int f0, f1, f2, f3, k, cell, pick, seen
    cdef double u

    for i in range(size):
        a = a_idx[i]
        b = b_idx[i]
        strat = cls[i] * 2 + (a & 1)
        sent[strat] += 1

        f0 = f1 = f2 = f3 = 0
        row = a * 4 + b
        for p in range(m[i]):
            u = land_u[off + p]
            if u < cdf[row, 0]:
                f0 = 1
            elif u < cdf[row, 1]:
                f1 = 1
            elif u < cdf[row, 2]:
                f2 = 1
            else:
                f3 = 1
        off += m[i]

        if dark[i, 0]:
            f0 = 1
        if dark[i, 1]:
            f1 = 1
        if dark[i, 2]:
            f2 = 1
        if dark[i, 3]:
            f3 = 1

        k = f0 + f1 + f2 + f3
        if k == 0:
            continue

        pick = <int>(tie_u[i] * k)
        seen = -1
        cell = 3
        if f0:
            seen += 1
            if seen == pick:
                cell = 0
        if f1 and seen < pick:
            seen += 1
            if seen == pick:
                cell = 1
        if f2 and seen < pick:
            seen += 1
            if seen == pick:
                cell = 2
        if f3 and seen < pick:
            seen += 1
            if seen == pick:
                cell = 3

        if part and cell >= 2:
            continue
        detected += 1

        if (a ^ b) & 1:
            continue
        sifted[strat] += 1
        if decode[b, cell] != (a >> 1):
            errors[strat] += 1

    return (sent_arr.reshape(n_cls, 2), sifted_arr.reshape(n_cls, 2),
            errors_arr.reshape(n_cls, 2), int(detected))
