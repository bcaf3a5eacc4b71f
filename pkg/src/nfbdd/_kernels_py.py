"""Pure-numpy fallback for the evaluation kernel.

Same contract and bit-identical results as the compiled version in
``_kernels.pyx``; selected at import time when the extension is missing
or NFBDD_PURE=1 is set.
"""

from __future__ import annotations

import numpy as np


def eval_many(kind, varbit, ch_ptr, ch_idx, qpos, bits):
    m = bits.shape[0]
    if m == 0:
        return np.empty(0, dtype=np.uint8)
    vals = np.zeros((qpos + 1, m), dtype=np.uint8)
    for i in range(qpos + 1):
        k = kind[i]
        if k == 0:
            continue
        if k == 1:
            vals[i] = 1
        elif k == 2:
            hi = ch_idx[ch_ptr[i]]
            lo = ch_idx[ch_ptr[i] + 1]
            b = (bits >> np.uint64(varbit[i])) & np.uint64(1)
            vals[i] = np.where(b == 1, vals[hi], vals[lo])
        else:
            acc = vals[ch_idx[ch_ptr[i]]]
            for c in range(ch_ptr[i] + 1, ch_ptr[i + 1]):
                acc = acc | vals[ch_idx[c]]
            vals[i] = acc
    return vals[qpos].copy()
