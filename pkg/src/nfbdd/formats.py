"""Text formats, the DNF compiler, and the seeded random-instance generator.

nFBDD file format (line oriented, whitespace separated, `c` comments):

    p nfbdd <n_vars> <n_nodes>
    <id> F                       0-sink
    <id> T                       1-sink
    <id> d <var> <hi_id> <lo_id> decision node
    <id> o <k> <child_1> ... <child_k>
    s <source_id>

Ids are positive integers unique within the file; forward references are
allowed and resolved after the full read.  The order of Or children in
the file is their semantic order (it drives the sampler's union
tie-break).  Duplicate sink declarations are merged.

DNF format (DIMACS flavored):

    p dnf <n_vars> <n_terms>
    <lit> ... <lit> 0            one term per line, signed variable indices
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import SINK0, SINK1, Decision, Nfbdd, NfbddError, Node, OrNode, Sink, validate
from .transform import CONSTANT_FALSE, ConstantFalse, _garbage_collect


class ParseError(NfbddError):
    pass


class GenerationError(NfbddError):
    pass


def parse_nfbdd(text: str) -> Nfbdd:
    n_vars: int | None = None
    decl: dict[int, tuple] = {}  # file id -> ("F"|"T") or ("d", var, hi, lo) or ("o", children)
    source_id: int | None = None
    declared_nodes = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens or tokens[0] == "c":
            continue
        if tokens[0] == "p":
            if n_vars is not None:
                raise ParseError(f"line {lineno}: duplicate header")
            if len(tokens) != 4 or tokens[1] != "nfbdd":
                raise ParseError(f"line {lineno}: malformed header, expected 'p nfbdd <n_vars> <n_nodes>'")
            try:
                n_vars, declared_nodes = int(tokens[2]), int(tokens[3])
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer header fields") from None
            if n_vars < 0 or declared_nodes < 0:
                raise ParseError(f"line {lineno}: negative header fields")
            continue
        if tokens[0] == "s":
            if len(tokens) != 2:
                raise ParseError(f"line {lineno}: malformed footer")
            try:
                source_id = int(tokens[1])
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer source id") from None
            continue
        if n_vars is None:
            raise ParseError(f"line {lineno}: node line before header")
        try:
            fid = int(tokens[0])
        except ValueError:
            raise ParseError(f"line {lineno}: expected a node id, got {tokens[0]!r}") from None
        if fid < 1:
            raise ParseError(f"line {lineno}: node ids must be positive")
        if len(tokens) < 2:
            raise ParseError(f"line {lineno}: missing node kind")
        kind = tokens[1]
        if kind in ("F", "T"):
            entry = (kind,)
        elif kind == "d":
            if len(tokens) != 5:
                raise ParseError(f"line {lineno}: decision node needs '<id> d <var> <hi> <lo>'")
            try:
                var, hi, lo = (int(t) for t in tokens[2:5])
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer decision fields") from None
            if not 1 <= var <= n_vars:
                raise ParseError(f"node {fid}: variable x{var} out of range [1, {n_vars}]")
            entry = ("d", var, hi, lo)
        elif kind == "o":
            try:
                k = int(tokens[2])
                children = [int(t) for t in tokens[3:]]
            except (ValueError, IndexError):
                raise ParseError(f"line {lineno}: malformed Or node line") from None
            if k != len(children):
                raise ParseError(f"line {lineno}: Or node declares {k} children, lists {len(children)}")
            entry = ("o", tuple(children))
        else:
            raise ParseError(f"line {lineno}: unknown node kind {kind!r}")
        if fid in decl:
            # duplicate sinks merge; anything else is an error
            if entry[0] in ("F", "T") and decl[fid] == entry:
                continue
            raise ParseError(f"node {fid}: repeated node id")
        decl[fid] = entry

    if n_vars is None:
        raise ParseError("missing 'p nfbdd' header")
    if source_id is None:
        raise ParseError("missing 's <source_id>' footer")
    if source_id not in decl:
        raise ParseError(f"node {source_id}: undefined source id")

    # merge duplicate sinks: map every F id to one node, every T id to one node
    remap: dict[int, int] = {}
    nodes: list[Node] = []
    sink_slot: dict[str, int] = {}
    for fid in sorted(decl):
        entry = decl[fid]
        if entry[0] in ("F", "T"):
            if entry[0] not in sink_slot:
                sink_slot[entry[0]] = len(nodes)
                nodes.append(SINK0 if entry[0] == "F" else SINK1)
            remap[fid] = sink_slot[entry[0]]
        else:
            remap[fid] = len(nodes)
            nodes.append(None)  # type: ignore[arg-type]

    def resolve(ref: int, owner: int) -> int:
        if ref not in remap:
            raise ParseError(f"node {owner}: undefined child id {ref}")
        return remap[ref]

    for fid in sorted(decl):
        entry = decl[fid]
        if entry[0] == "d":
            _, var, hi, lo = entry
            nodes[remap[fid]] = Decision(var, resolve(hi, fid), resolve(lo, fid))
        elif entry[0] == "o":
            nodes[remap[fid]] = OrNode(tuple(resolve(c, fid) for c in entry[1]))

    B = Nfbdd(n_vars, nodes, remap[source_id])
    report = validate(B)
    if not report.ok:
        raise ParseError("validation failed: " + "; ".join(report.violations))
    return B


def serialize_nfbdd(B: Nfbdd) -> str:
    """Canonical text form: reachable nodes only, ids in topological order."""
    order = B.topo_order()
    ids = {q: i + 1 for i, q in enumerate(order)}
    lines = [f"p nfbdd {B.n_vars} {len(order)}"]
    for q in order:
        node = B.nodes[q]
        if isinstance(node, Sink):
            lines.append(f"{ids[q]} {'T' if node.value else 'F'}")
        elif isinstance(node, Decision):
            lines.append(f"{ids[q]} d {node.var} {ids[node.hi]} {ids[node.lo]}")
        else:
            kids = " ".join(str(ids[c]) for c in node.children)
            lines.append(f"{ids[q]} o {len(node.children)} {kids}")
    lines.append(f"s {ids[B.source]}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DnfFormula:
    n_vars: int
    terms: tuple[tuple[int, ...], ...]  # signed literals, never 0


def parse_dnf(text: str) -> DnfFormula:
    n_vars: int | None = None
    n_terms = 0
    terms: list[tuple[int, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens or tokens[0] == "c":
            continue
        if tokens[0] == "p":
            if n_vars is not None:
                raise ParseError(f"line {lineno}: duplicate header")
            if len(tokens) != 4 or tokens[1] != "dnf":
                raise ParseError(f"line {lineno}: malformed header, expected 'p dnf <n_vars> <n_terms>'")
            try:
                n_vars, n_terms = int(tokens[2]), int(tokens[3])
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer header fields") from None
            continue
        if n_vars is None:
            raise ParseError(f"line {lineno}: term line before header")
        try:
            lits = [int(t) for t in tokens]
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer literal") from None
        if lits[-1] != 0:
            raise ParseError(f"line {lineno}: term not terminated by 0")
        lits = lits[:-1]
        seen: set[int] = set()
        for lit in lits:
            if lit == 0:
                raise ParseError(f"line {lineno}: stray 0 inside a term")
            v = abs(lit)
            if not 1 <= v <= n_vars:
                raise ParseError(f"line {lineno}: variable x{v} out of range [1, {n_vars}]")
            if v in seen:
                raise ParseError(f"line {lineno}: contradictory or duplicated variable x{v} in a term")
            seen.add(v)
        terms.append(tuple(lits))
    if n_vars is None:
        raise ParseError("missing 'p dnf' header")
    if len(terms) != n_terms:
        raise ParseError(f"header declares {n_terms} terms, found {len(terms)}")
    return DnfFormula(n_vars, tuple(terms))


def dnf_to_nfbdd(f: DnfFormula) -> Nfbdd | ConstantFalse:
    """One decision chain per term under a root Or node.

    Each chain tests the term's variables in ascending index order; the
    unsatisfying bit routes to the 0-sink.  Free by construction.
    """
    if not f.terms:
        return CONSTANT_FALSE
    nodes: list[Node] = [SINK0, SINK1]
    chains: list[int] = []
    for term in f.terms:
        cur = 1  # 1-sink
        for lit in sorted(term, key=abs, reverse=True):
            var = abs(lit)
            if lit > 0:
                nodes.append(Decision(var, cur, 0))
            else:
                nodes.append(Decision(var, 0, cur))
            cur = len(nodes) - 1
        chains.append(cur)
    nodes.append(OrNode(tuple(chains)))
    return Nfbdd(f.n_vars, nodes, len(nodes) - 1)


def eval_dnf(f: DnfFormula, bits: int) -> int:
    """Truth-table oracle for a DNF, independent of the diagram compiler."""
    for term in f.terms:
        if all((bits >> (abs(lit) - 1) & 1) == (1 if lit > 0 else 0) for lit in term):
            return 1
    return 0


def gen_random(n: int, target_edges: int, seed: int) -> Nfbdd:
    """Seeded random free nFBDD with edge count within 2x of the target.

    Free by construction: decision nodes consume their variable before
    recursing, and a node is reused below another node only when its
    variable set fits the variables still available there.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if target_edges < 4:
        raise ValueError("target_edges must be >= 4")
    master = random.Random(seed)
    full = (1 << n) - 1
    low, high = (target_edges + 1) // 2, 2 * target_edges
    for attempt in range(300):
        rng = random.Random(master.getrandbits(64))
        B = _gen_attempt(n, full, target_edges, rng)
        if B is not None and low <= B.size <= high:
            report = validate(B)
            if report.ok:
                return B
    raise GenerationError(f"could not hit an edge count within 2x of {target_edges} for n={n}")


def _gen_attempt(n: int, full: int, target_edges: int, rng: random.Random) -> Nfbdd | None:
    nodes: list[Node] = [SINK0, SINK1]
    var_masks: list[int] = [0, 0]
    edges = 0
    pool: list[int] = []  # interior nodes available for reuse

    def build(avail: int, depth: int) -> int:
        nonlocal edges
        if edges > 3 * target_edges:
            return 1
        if pool and rng.random() < 0.25:
            fits = [q for q in pool if var_masks[q] & ~avail == 0]
            if fits:
                return rng.choice(fits)
        vs = [v + 1 for v in range(n) if avail >> v & 1]
        if not vs or depth <= 0:
            return 1 if rng.random() < 0.75 else 0
        if rng.random() < 0.35 and depth > 1:
            k = rng.randint(2, 3)
            kids = tuple(build(avail, depth - 1) for _ in range(k))
            node: Node = OrNode(kids)
            mask = 0
            for c in kids:
                mask |= var_masks[c]
        else:
            x = rng.choice(vs)
            sub = avail & ~(1 << (x - 1))
            hi = build(sub, depth - 1)
            lo = build(sub, depth - 1)
            node = Decision(x, hi, lo)
            mask = (1 << (x - 1)) | var_masks[hi] | var_masks[lo]
        nodes.append(node)
        var_masks.append(mask)
        q = len(nodes) - 1
        edges += 2 if isinstance(node, Decision) else len(node.children)
        pool.append(q)
        return q

    depth = max(2, n + rng.randint(0, 3))
    src = build(full, depth)
    if isinstance(nodes[src], Sink):
        return None
    # drop unreachable leftovers from the shared pool
    return _garbage_collect(Nfbdd(n, nodes, src))
