"""Flat array view of a normalized diagram for the sampling engine.

Nodes are renumbered to topological positions (sinks first, then layer by
layer) so the kernels can run a single bottom-up sweep.  Model-membership
answers are cached per graph; they are deterministic, so the cache is safe
to share across runs and threads.
"""

from __future__ import annotations

import threading

import numpy as np

from ._backend import KERNELS
from .core import SINK0, SINK1, Decision, Nfbdd, OrNode

KIND_SINK0 = 0
KIND_SINK1 = 1
KIND_DECISION = 2
KIND_OR = 3

_MAX_FAST_VARS = 64


class CompiledGraph:
    def __init__(self, B: Nfbdd, layer_index):
        if B.n_vars > _MAX_FAST_VARS:
            raise ValueError(f"sampling engine supports at most {_MAX_FAST_VARS} variables")
        self.nfbdd = B
        self.n_vars = B.n_vars
        order: list[int] = []
        for layer in layer_index:
            order.extend(layer)
        self.order = order  # original node ids, sinks first
        self.pos = {q: i for i, q in enumerate(order)}
        n = len(order)
        kind = np.zeros(n, dtype=np.int8)
        varbit = np.zeros(n, dtype=np.int32)
        ptr = np.zeros(n + 1, dtype=np.int64)
        idx: list[int] = []
        for i, q in enumerate(order):
            node = B.nodes[q]
            if node == SINK0:
                kind[i] = KIND_SINK0
            elif node == SINK1:
                kind[i] = KIND_SINK1
            elif isinstance(node, Decision):
                kind[i] = KIND_DECISION
                varbit[i] = node.var - 1
                idx.extend((self.pos[node.hi], self.pos[node.lo]))
            else:
                kind[i] = KIND_OR
                idx.extend(self.pos[c] for c in node.children)
            ptr[i + 1] = len(idx)
        self.kind = kind
        self.varbit = varbit
        self.ch_ptr = ptr
        self.ch_idx = np.asarray(idx, dtype=np.int32)
        self.source_pos = self.pos[B.source]
        self.size = B.size
        self._member_cache: list[dict[int, bool]] = [dict() for _ in range(n)]
        self._lock = threading.Lock()

    def node_kind(self, pos: int) -> int:
        return int(self.kind[pos])

    def children_pos(self, pos: int) -> np.ndarray:
        return self.ch_idx[self.ch_ptr[pos] : self.ch_ptr[pos + 1]]

    def eval_many(self, pos: int, bits: np.ndarray) -> np.ndarray:
        """Batched model check of total assignments at a node position."""
        return KERNELS.eval_many(
            self.kind, self.varbit, self.ch_ptr, self.ch_idx, pos, np.ascontiguousarray(bits, dtype=np.uint64)
        )

    def is_model(self, pos: int, bits: np.ndarray) -> np.ndarray:
        """Cached membership: out[s] = 1 iff bits[s] is a model at ``pos``."""
        cache = self._member_cache[pos]
        uniq, inverse = np.unique(bits, return_inverse=True)
        ans = np.empty(len(uniq), dtype=np.uint8)
        unknown: list[int] = []
        unknown_at: list[int] = []
        for s, b in enumerate(uniq):
            hit = cache.get(int(b))
            if hit is None:
                unknown.append(int(b))
                unknown_at.append(s)
            else:
                ans[s] = hit
        if unknown:
            fresh = self.eval_many(pos, np.asarray(unknown, dtype=np.uint64))
            with self._lock:
                for b, v in zip(unknown, fresh):
                    cache[b] = bool(v)
            ans[unknown_at] = fresh
        return ans[inverse]
