# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel for batched model checking.

Nodes are given in topological order (children before parents).  Kind
codes: 0 = 0-sink, 1 = 1-sink, 2 = decision, 3 = Or.  Decision children
are stored as [hi, lo] in the CSR arrays; ``varbit`` holds the 0-based
bit position of the decision variable.
"""

import numpy as np

cimport numpy as cnp


def eval_many(const signed char[::1] kind,
              const int[::1] varbit,
              const long long[::1] ch_ptr,
              const int[::1] ch_idx,
              Py_ssize_t qpos,
              const unsigned long long[::1] bits):
    """Evaluate all assignments in ``bits`` at node position ``qpos``."""
    cdef Py_ssize_t m = bits.shape[0]
    cdef cnp.ndarray out_arr = np.empty(m, dtype=np.uint8)
    if m == 0:
        return out_arr
    vals_arr = np.zeros((qpos + 1, m), dtype=np.uint8)
    cdef unsigned char[:, ::1] vals = vals_arr
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i, s
    cdef long long c
    cdef int k, child, hi, lo
    cdef unsigned char acc
    for i in range(qpos + 1):
        k = kind[i]
        if k == 0:
            pass  # already zero
        elif k == 1:
            for s in range(m):
                vals[i, s] = 1
        elif k == 2:
            hi = ch_idx[ch_ptr[i]]
            lo = ch_idx[ch_ptr[i] + 1]
            for s in range(m):
                if (bits[s] >> varbit[i]) & 1:
                    vals[i, s] = vals[hi, s]
                else:
                    vals[i, s] = vals[lo, s]
        else:
            for s in range(m):
                acc = 0
                for c in range(ch_ptr[i], ch_ptr[i + 1]):
                    if vals[ch_idx[c], s]:
                        acc = 1
                        break
                vals[i, s] = acc
    for s in range(m):
        out[s] = vals[qpos, s]
    return out_arr
