"""Non-deterministic free BDDs: data structure, validation, evaluation, exact counting.

An nFBDD is a single-source DAG whose internal nodes are either decision
nodes ite(x, hi, lo) or guess (Or) nodes with an ordered sequence of
children, and whose leaves are the 0-sink and the 1-sink.  Freeness means
no root-to-sink path reads a variable twice.  Variables are 1-based.

The diagram is immutable after construction; all operations here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

BRUTE_FORCE_CAP = 24

# evaluation chunk: 2**18 assignments at a time keeps peak memory modest
_CHUNK_BITS = 18


class NfbddError(Exception):
    pass


class UnknownNodeError(NfbddError):
    pass


class MissingVariableError(NfbddError):
    pass


class CapExceededError(NfbddError):
    pass


class NotNormalFormError(NfbddError):
    pass


@dataclass(frozen=True)
class Sink:
    value: int  # 0 or 1


SINK0 = Sink(0)
SINK1 = Sink(1)


@dataclass(frozen=True)
class Decision:
    var: int
    hi: int  # 1-child
    lo: int  # 0-child


@dataclass(frozen=True)
class OrNode:
    children: tuple[int, ...]


Node = Sink | Decision | OrNode


@dataclass(frozen=True)
class Assignment:
    """Partial assignment stored as value bits plus a bound-variable mask.

    Bit position v-1 carries the value of variable v; positions outside
    ``mask`` are zero.
    """

    bits: int = 0
    mask: int = 0

    def __post_init__(self):
        if self.bits & ~self.mask:
            raise ValueError("value bits outside the bound-variable mask")

    @classmethod
    def from_dict(cls, bindings: dict[int, int]) -> "Assignment":
        bits = 0
        mask = 0
        for var, b in bindings.items():
            if var < 1:
                raise ValueError(f"variable index {var} < 1")
            mask |= 1 << (var - 1)
            if b:
                bits |= 1 << (var - 1)
        return cls(bits, mask)

    @classmethod
    def total(cls, bits: int, n_vars: int) -> "Assignment":
        return cls(bits, (1 << n_vars) - 1)

    def binds(self, var: int) -> bool:
        return bool(self.mask >> (var - 1) & 1)

    def value(self, var: int) -> int:
        if not self.binds(var):
            raise MissingVariableError(f"variable x{var} is unbound")
        return self.bits >> (var - 1) & 1

    def extend(self, var: int, b: int) -> "Assignment":
        """The ⊗ composition with {var ↦ b}; var must be fresh."""
        bit = 1 << (var - 1)
        if self.mask & bit:
            raise ValueError(f"variable x{var} already bound")
        return Assignment(self.bits | (bit if b else 0), self.mask | bit)

    def restrict(self, mask: int) -> "Assignment":
        return Assignment(self.bits & mask, self.mask & mask)

    def union(self, other: "Assignment") -> "Assignment":
        overlap = self.mask & other.mask
        if (self.bits ^ other.bits) & overlap:
            raise ValueError("assignments disagree on a shared variable")
        return Assignment(self.bits | other.bits, self.mask | other.mask)

    def variables(self) -> frozenset[int]:
        return _mask_to_vars(self.mask)

    def to_dict(self) -> dict[int, int]:
        return {v: self.bits >> (v - 1) & 1 for v in sorted(self.variables())}


ALPHA_EMPTY = Assignment(0, 0)


def _mask_to_vars(mask: int) -> frozenset[int]:
    out = []
    v = 1
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return frozenset(out)


@dataclass(frozen=True)
class LayerIndex:
    """Layers L_0 .. L_2n of a normalized diagram; L_0 holds the sinks."""

    layers: tuple[tuple[int, ...], ...]

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.layers)

    def __len__(self) -> int:
        return len(self.layers)

    def layer_of(self, q: int) -> int:
        for i, layer in enumerate(self.layers):
            if q in layer:
                return i
        raise UnknownNodeError(f"node {q} not in any layer")


class Nfbdd:
    """Immutable nFBDD over variables x1..xn with an append-only node table."""

    def __init__(self, n_vars: int, nodes: list[Node] | tuple[Node, ...], source: int):
        if n_vars < 0:
            raise ValueError("n_vars must be >= 0")
        self.n_vars = n_vars
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.source = source
        if not (0 <= source < len(self.nodes)):
            raise UnknownNodeError(f"source id {source} out of range")
        self._var_masks: list[int] | None = None

    def node(self, q: int) -> Node:
        if not (0 <= q < len(self.nodes)):
            raise UnknownNodeError(f"node id {q} out of range")
        return self.nodes[q]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def size(self) -> int:
        """Number of edges."""
        total = 0
        for node in self.nodes:
            if isinstance(node, Decision):
                total += 2
            elif isinstance(node, OrNode):
                total += len(node.children)
        return total

    def children(self, q: int) -> tuple[int, ...]:
        node = self.node(q)
        if isinstance(node, Decision):
            return (node.hi, node.lo)
        if isinstance(node, OrNode):
            return node.children
        return ()

    def topo_order(self) -> list[int]:
        """Nodes reachable from the source, children before parents."""
        order: list[int] = []
        seen = [False] * len(self.nodes)
        stack: list[tuple[int, bool]] = [(self.source, False)]
        while stack:
            q, expanded = stack.pop()
            if expanded:
                order.append(q)
                continue
            if seen[q]:
                continue
            seen[q] = True
            stack.append((q, True))
            for c in self.children(q):
                if not (0 <= c < len(self.nodes)):
                    raise UnknownNodeError(f"node {q} references unknown child {c}")
                if not seen[c]:
                    stack.append((c, False))
        return order

    def var_mask(self, q: int) -> int:
        """Bit mask of var(q): variables labeling decision nodes reachable from q."""
        if self._var_masks is None:
            masks = [0] * len(self.nodes)
            for q2 in self.topo_order():
                node = self.nodes[q2]
                if isinstance(node, Decision):
                    masks[q2] = (1 << (node.var - 1)) | masks[node.hi] | masks[node.lo]
                elif isinstance(node, OrNode):
                    m = 0
                    for c in node.children:
                        m |= masks[c]
                    masks[q2] = m
            self._var_masks = masks
        self.node(q)
        return self._var_masks[q]


def vars_of(B: Nfbdd, q: int) -> frozenset[int]:
    """var(q): the variables labeling decision nodes reachable from q."""
    return _mask_to_vars(B.var_mask(q))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(B: Nfbdd) -> ValidationReport:
    """Checks all structural invariants; violations are reported, not raised.

    Freeness is checked through the equivalent per-node condition: for
    every decision node labeled x, x does not occur in var(hi) or var(lo).
    """
    report = ValidationReport()
    n_nodes = len(B.nodes)

    sink0s = [i for i, nd in enumerate(B.nodes) if nd == SINK0]
    sink1s = [i for i, nd in enumerate(B.nodes) if nd == SINK1]
    if len(sink0s) > 1:
        report.violations.append(f"multiple 0-sinks: {sink0s}")
    if len(sink1s) > 1:
        report.violations.append(f"multiple 1-sinks: {sink1s}")

    dangling = False
    for i, nd in enumerate(B.nodes):
        if isinstance(nd, Decision):
            if not (1 <= nd.var <= B.n_vars):
                report.violations.append(f"node {i}: variable x{nd.var} out of range [1, {B.n_vars}]")
            for c in (nd.hi, nd.lo):
                if not (0 <= c < n_nodes):
                    report.violations.append(f"node {i}: dangling child id {c}")
                    dangling = True
        elif isinstance(nd, OrNode):
            if len(nd.children) == 0:
                report.violations.append(f"node {i}: Or node with zero children")
            for c in nd.children:
                if not (0 <= c < n_nodes):
                    report.violations.append(f"node {i}: dangling child id {c}")
                    dangling = True
    if dangling:
        return report

    # cycle detection via coloring over all nodes
    color = [0] * n_nodes  # 0 white, 1 gray, 2 black
    cyclic = False
    for start in range(n_nodes):
        if color[start]:
            continue
        stack: list[tuple[int, bool]] = [(start, False)]
        while stack:
            q, done = stack.pop()
            if done:
                color[q] = 2
                continue
            if color[q] == 2:
                continue
            if color[q] == 1:
                cyclic = True
                color[q] = 2
                continue
            color[q] = 1
            stack.append((q, True))
            for c in _raw_children(B.nodes[q]):
                if color[c] == 1:
                    cyclic = True
                elif color[c] == 0:
                    stack.append((c, False))
    if cyclic:
        report.violations.append("cycle in the node graph")
        return report

    # single-source: no incoming edges anywhere but at B.source
    incoming = [0] * n_nodes
    for nd in B.nodes:
        for c in _raw_children(nd):
            incoming[c] += 1
    roots = [i for i in range(n_nodes) if incoming[i] == 0]
    if incoming[B.source] > 0:
        report.violations.append(f"declared source {B.source} has incoming edges")
    extra = [r for r in roots if r != B.source]
    if extra:
        report.violations.append(f"multiple sources: nodes {extra} have no incoming edges")

    # freeness via the per-node condition
    for i, nd in enumerate(B.nodes):
        if isinstance(nd, Decision):
            bit = 1 << (nd.var - 1)
            if (B.var_mask(nd.hi) | B.var_mask(nd.lo)) & bit:
                report.violations.append(f"variable x{nd.var} repeated on a path through node {i}")
    return report


def _raw_children(node: Node) -> tuple[int, ...]:
    if isinstance(node, Decision):
        return (node.hi, node.lo)
    if isinstance(node, OrNode):
        return node.children
    return ()


def evaluate(B: Nfbdd, q: int, alpha: Assignment) -> int:
    """1 iff alpha (restricted to var(q)) is a model of the sub-diagram at q.

    Bottom-up single pass over the reachable subgraph.
    """
    need = B.var_mask(q)
    if need & ~alpha.mask:
        missing = sorted(_mask_to_vars(need & ~alpha.mask))
        raise MissingVariableError(f"assignment misses variables {missing}")
    val: dict[int, int] = {}
    order = _sub_topo(B, q)
    for q2 in order:
        node = B.nodes[q2]
        if isinstance(node, Sink):
            val[q2] = node.value
        elif isinstance(node, Decision):
            b = alpha.bits >> (node.var - 1) & 1
            val[q2] = val[node.hi if b else node.lo]
        else:
            val[q2] = int(any(val[c] for c in node.children))
    return val[q]


def _sub_topo(B: Nfbdd, q: int) -> list[int]:
    order: list[int] = []
    seen: set[int] = set()
    stack: list[tuple[int, bool]] = [(q, False)]
    while stack:
        cur, done = stack.pop()
        if done:
            order.append(cur)
            continue
        if cur in seen:
            continue
        seen.add(cur)
        stack.append((cur, True))
        for c in B.children(cur):
            if c not in seen:
                stack.append((c, False))
    return order


def accepting_path_exists(B: Nfbdd, q: int, alpha: Assignment) -> bool:
    """Path-existence oracle: explicit search for a q-to-1-sink path consistent
    with alpha.  Independent of the bottom-up evaluator; test use only."""
    stack = [q]
    seen: set[int] = set()
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        node = B.nodes[cur]
        if node == SINK1:
            return True
        if isinstance(node, Decision):
            stack.append(node.hi if alpha.value(node.var) else node.lo)
        elif isinstance(node, OrNode):
            stack.extend(node.children)
    return False


def count_exact(B: Nfbdd, cap: int = BRUTE_FORCE_CAP) -> int:
    """|B^{-1}(1)| by enumerating all 2^n total assignments.

    Chunked and vectorized with numpy; raises CapExceededError above the cap.
    """
    n = B.n_vars
    if n > cap:
        raise CapExceededError(f"n_vars={n} exceeds brute-force cap {cap}")
    order = _sub_topo(B, B.source)
    total = 0
    chunk = 1 << min(n, _CHUNK_BITS)
    for start in range(0, 1 << n, chunk):
        bits = np.arange(start, start + chunk, dtype=np.uint64)
        total += int(_eval_bits(B, order, bits).sum())
    return total


def _eval_bits(B: Nfbdd, order: list[int], bits: np.ndarray) -> np.ndarray:
    val: dict[int, np.ndarray] = {}
    for q in order:
        node = B.nodes[q]
        if isinstance(node, Sink):
            val[q] = np.full(bits.shape, node.value, dtype=np.uint8)
        elif isinstance(node, Decision):
            b = (bits >> np.uint64(node.var - 1)) & np.uint64(1)
            val[q] = np.where(b == 1, val[node.hi], val[node.lo])
        else:
            acc = val[node.children[0]]
            for c in node.children[1:]:
                acc = acc | val[c]
            val[q] = acc
    return val[order[-1]]


def enumerate_models(B: Nfbdd, q: int, cap: int = BRUTE_FORCE_CAP) -> list[Assignment]:
    """mod(q) as total assignments over var(q), by brute-force enumeration."""
    mask = B.var_mask(q)
    positions = [v - 1 for v in sorted(_mask_to_vars(mask))]
    k = len(positions)
    if k > cap:
        raise CapExceededError(f"|var(q)|={k} exceeds brute-force cap {cap}")
    order = _sub_topo(B, q)
    idx = np.arange(1 << k, dtype=np.uint64)
    bits = np.zeros(1 << k, dtype=np.uint64)
    for j, pos in enumerate(positions):
        bits |= ((idx >> np.uint64(j)) & np.uint64(1)) << np.uint64(pos)
    vals = _eval_bits(B, order, bits)
    return [Assignment(int(b), mask) for b in bits[vals == 1]]


def layers(B: Nfbdd) -> LayerIndex:
    """The unique layering of a 1-complete, 0-reduced, alternating diagram.

    The degenerate constant-true diagram over 0 variables (source = 1-sink)
    yields the single layer L_0.
    """
    order = B.topo_order()
    level: dict[int, int] = {}
    for q in order:
        node = B.nodes[q]
        if isinstance(node, Sink):
            level[q] = 0
            continue
        kids = [c for c in _raw_children(node) if B.nodes[c] != SINK0]
        if not kids:
            raise NotNormalFormError(f"node {q}: all children are the 0-sink")
        child_levels = {level[c] for c in kids}
        if len(child_levels) != 1:
            raise NotNormalFormError(f"node {q}: children span layers {sorted(child_levels)}")
        lv = child_levels.pop() + 1
        if lv % 2 == 1 and not isinstance(node, Decision):
            raise NotNormalFormError(f"node {q}: odd layer {lv} holds a non-decision node")
        if lv % 2 == 0 and not isinstance(node, OrNode):
            raise NotNormalFormError(f"node {q}: even layer {lv} holds a non-Or node")
        level[q] = lv
    top = level[B.source]
    if top != 2 * B.n_vars:
        raise NotNormalFormError(f"source sits in layer {top}, expected {2 * B.n_vars}")
    if top > 0 and not isinstance(B.nodes[B.source], OrNode):
        raise NotNormalFormError("source is not an Or node")
    out: list[list[int]] = [[] for _ in range(top + 1)]
    for q in order:
        out[level[q]].append(q)
    return LayerIndex(tuple(tuple(layer) for layer in out))
