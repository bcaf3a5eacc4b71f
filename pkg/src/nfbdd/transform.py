"""Normalization pipeline: 0-reduce, flatten Or nodes, 1-complete, alternate.

Each stage is a separate pass producing a fresh node table, so its
postcondition can be checked in isolation.  The composition preserves the
Boolean function; a diagram whose function is identically false is
reported as CONSTANT_FALSE rather than rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    SINK0,
    SINK1,
    Decision,
    LayerIndex,
    Nfbdd,
    Node,
    OrNode,
    Sink,
    layers,
    validate,
)


class ConstantFalse:
    """Marker for diagrams computing the all-zero function."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "CONSTANT_FALSE"


CONSTANT_FALSE = ConstantFalse()


@dataclass(frozen=True)
class Normalized:
    diagram: Nfbdd
    layers: LayerIndex


NormalForm = Normalized | ConstantFalse


class _Builder:
    """Fresh node table with hash-consing of sinks."""

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.nodes: list[Node] = []
        self._sink0: int | None = None
        self._sink1: int | None = None

    def add(self, node: Node) -> int:
        self.nodes.append(node)
        return len(self.nodes) - 1

    def sink0(self) -> int:
        if self._sink0 is None:
            self._sink0 = self.add(SINK0)
        return self._sink0

    def sink1(self) -> int:
        if self._sink1 is None:
            self._sink1 = self.add(SINK1)
        return self._sink1

    def finish(self, source: int) -> Nfbdd:
        return _garbage_collect(Nfbdd(self.n_vars, self.nodes, source))


def _garbage_collect(B: Nfbdd) -> Nfbdd:
    """Drop nodes unreachable from the source, renumbering in topo order."""
    order = B.topo_order()
    remap = {old: new for new, old in enumerate(order)}
    nodes: list[Node] = []
    for old in order:
        node = B.nodes[old]
        if isinstance(node, Decision):
            nodes.append(Decision(node.var, remap[node.hi], remap[node.lo]))
        elif isinstance(node, OrNode):
            nodes.append(OrNode(tuple(remap[c] for c in node.children)))
        else:
            nodes.append(node)
    return Nfbdd(B.n_vars, nodes, remap[B.source])


def zero_reduce(B: Nfbdd) -> Nfbdd | ConstantFalse:
    """Remove ite(x, 0-sink, 0-sink) nodes and 0-sink Or children.

    A single bottom-up pass reaches the fixed point.  Returns
    CONSTANT_FALSE when the source itself collapses to the 0-sink.
    """
    out = _Builder(B.n_vars)
    remap: dict[int, int] = {}
    for q in B.topo_order():
        node = B.nodes[q]
        if node == SINK0:
            remap[q] = out.sink0()
        elif node == SINK1:
            remap[q] = out.sink1()
        elif isinstance(node, Decision):
            hi, lo = remap[node.hi], remap[node.lo]
            if out.nodes[hi] == SINK0 and out.nodes[lo] == SINK0:
                remap[q] = out.sink0()
            else:
                remap[q] = out.add(Decision(node.var, hi, lo))
        else:
            kids = tuple(remap[c] for c in node.children if out.nodes[remap[c]] != SINK0)
            remap[q] = out.add(OrNode(kids)) if kids else out.sink0()
    src = remap[B.source]
    if out.nodes[src] == SINK0:
        return CONSTANT_FALSE
    return out.finish(src)


def flatten_or(B: Nfbdd) -> Nfbdd:
    """Inline Or-over-Or children and absorb 1-sink children.

    An Or node with the 1-sink among its children becomes the 1-sink;
    an Or child of an Or node is replaced in place by its own children,
    preserving relative order.
    """
    out = _Builder(B.n_vars)
    remap: dict[int, int] = {}
    for q in B.topo_order():
        node = B.nodes[q]
        if node == SINK0:
            remap[q] = out.sink0()
        elif node == SINK1:
            remap[q] = out.sink1()
        elif isinstance(node, Decision):
            remap[q] = out.add(Decision(node.var, remap[node.hi], remap[node.lo]))
        else:
            kids: list[int] = []
            absorbed = False
            for c in node.children:
                mapped = remap[c]
                sub = out.nodes[mapped]
                if sub == SINK1:
                    absorbed = True
                    break
                if isinstance(sub, OrNode):
                    kids.extend(sub.children)  # already flat below
                else:
                    kids.append(mapped)
            remap[q] = out.sink1() if absorbed else out.add(OrNode(tuple(kids)))
    return out.finish(remap[B.source])


def one_complete(B: Nfbdd) -> Nfbdd:
    """Pad edges with ite(x, c, c) chains so every accepting path reads every
    declared variable exactly once.

    Padding variables are inserted in ascending index order along the path;
    chains are memoized per (child, missing-variable-set).  Edges into the
    0-sink are left unpadded.
    """
    out = _Builder(B.n_vars)
    remap: dict[int, int] = {}
    chain_memo: dict[tuple[int, int], int] = {}

    def pad(c: int, missing: int) -> int:
        if not missing:
            return c
        key = (c, missing)
        cached = chain_memo.get(key)
        if cached is not None:
            return cached
        v = (missing & -missing).bit_length()  # smallest missing variable
        inner = pad(c, missing & ~(1 << (v - 1)))
        node = out.add(Decision(v, inner, inner))
        chain_memo[key] = node
        return node

    for q in B.topo_order():
        node = B.nodes[q]
        if node == SINK0:
            remap[q] = out.sink0()
        elif node == SINK1:
            remap[q] = out.sink1()
        elif isinstance(node, Decision):
            target = B.var_mask(q) & ~(1 << (node.var - 1))
            if B.nodes[node.hi] == SINK0:
                hi = remap[node.hi]
            else:
                hi = pad(remap[node.hi], target & ~B.var_mask(node.hi))
            if B.nodes[node.lo] == SINK0:
                lo = remap[node.lo]
            else:
                lo = pad(remap[node.lo], target & ~B.var_mask(node.lo))
            remap[q] = out.add(Decision(node.var, hi, lo))
        else:
            target = B.var_mask(q)
            kids = tuple(pad(remap[c], target & ~B.var_mask(c)) for c in node.children)
            remap[q] = out.add(OrNode(kids))

    full = (1 << B.n_vars) - 1
    src = pad(remap[B.source], full & ~B.var_mask(B.source))
    return out.finish(src)


def alternate(B: Nfbdd) -> Nfbdd:
    """Wrap decision children of decision nodes, and the source, in singleton
    Or nodes so that Or and decision layers strictly alternate."""
    out = _Builder(B.n_vars)
    remap: dict[int, int] = {}
    wrap_memo: dict[int, int] = {}

    def wrap(c: int) -> int:
        if c not in wrap_memo:
            wrap_memo[c] = out.add(OrNode((c,)))
        return wrap_memo[c]

    for q in B.topo_order():
        node = B.nodes[q]
        if node == SINK0:
            remap[q] = out.sink0()
        elif node == SINK1:
            remap[q] = out.sink1()
        elif isinstance(node, Decision):
            hi, lo = remap[node.hi], remap[node.lo]
            if isinstance(out.nodes[hi], Decision):
                hi = wrap(hi)
            if isinstance(out.nodes[lo], Decision):
                lo = wrap(lo)
            remap[q] = out.add(Decision(node.var, hi, lo))
        else:
            remap[q] = out.add(OrNode(tuple(remap[c] for c in node.children)))
    src = remap[B.source]
    if isinstance(out.nodes[src], Decision):
        src = wrap(src)
    return out.finish(src)


def normalize(B: Nfbdd) -> NormalForm:
    """zero_reduce -> flatten_or -> one_complete -> alternate, with the
    0-reduction invariant re-checked after every stage."""
    report = validate(B)
    if not report.ok:
        raise ValueError("invalid input diagram: " + "; ".join(report.violations))
    reduced = zero_reduce(B)
    if reduced is CONSTANT_FALSE:
        return CONSTANT_FALSE
    stage = reduced
    for step in (flatten_or, one_complete, alternate):
        stage = step(stage)
        if not is_zero_reduced(stage):
            raise AssertionError(f"{step.__name__} broke 0-reduction")
    assert is_flat(stage) and is_one_complete(stage) and is_alternating(stage)
    return Normalized(stage, layers(stage))


# ---------------------------------------------------------------------------
# structural predicates

def is_zero_reduced(B: Nfbdd) -> bool:
    for q in B.topo_order():
        node = B.nodes[q]
        if isinstance(node, Decision):
            if B.nodes[node.hi] == SINK0 and B.nodes[node.lo] == SINK0:
                return False
        elif isinstance(node, OrNode):
            if any(B.nodes[c] == SINK0 for c in node.children):
                return False
    return True


def is_flat(B: Nfbdd) -> bool:
    """No Or node has an Or node or a sink among its children."""
    for q in B.topo_order():
        node = B.nodes[q]
        if isinstance(node, OrNode):
            for c in node.children:
                if isinstance(B.nodes[c], (OrNode, Sink)):
                    return False
    return True


def is_one_complete(B: Nfbdd) -> bool:
    """var(c) = var(q) minus the decision variable, for every non-0-sink child,
    and the source reads all declared variables."""
    full = (1 << B.n_vars) - 1
    if B.var_mask(B.source) != full:
        return False
    for q in B.topo_order():
        node = B.nodes[q]
        if isinstance(node, Decision):
            target = B.var_mask(q) & ~(1 << (node.var - 1))
            for c in (node.hi, node.lo):
                if B.nodes[c] != SINK0 and B.var_mask(c) != target:
                    return False
        elif isinstance(node, OrNode):
            for c in node.children:
                if B.var_mask(c) != B.var_mask(q):
                    return False
    return True


def is_alternating(B: Nfbdd) -> bool:
    src = B.nodes[B.source]
    if not isinstance(src, OrNode) and not (src == SINK1 and B.n_vars == 0):
        return False
    for q in B.topo_order():
        node = B.nodes[q]
        if isinstance(node, OrNode):
            if any(not isinstance(B.nodes[c], Decision) for c in node.children):
                return False
        elif isinstance(node, Decision):
            for c in (node.hi, node.lo):
                if isinstance(B.nodes[c], Decision):
                    return False
    return True
