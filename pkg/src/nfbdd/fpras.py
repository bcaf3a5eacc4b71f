"""Randomized counting engine: sample-set maintenance, the interruptible
core run, and the median-amplified approximate counter.

The engine walks a normalized diagram layer by layer.  For every node q it
maintains p(q), an estimate of 1/|mod(q)|, and n_s*n_t sample sets
S^r(q) of models of q.  Decision nodes combine their children's sets
after Bernoulli thinning; Or nodes merge thinned child sets with a
first-model tie-break and re-estimate p(q) with a median of means over
batch averages of the merged set sizes.  A run aborts with estimate 0 as
soon as any sample set reaches the size cap theta.

Two layers of API:

* reference operations (reduce_set, union_first_model, step_decision,
  step_or) working on explicit sets of Assignments over a plain Nfbdd;
* the vectorized engine (core_run, approx_count) working on flat numpy
  arrays over a CompiledGraph.  Both consume randomness in the same
  order, so with matching substreams they produce identical sample sets.

Probabilities use double precision extended with infinity: p(0-sink) is
inf, 1/inf is 0 and 1/0 is inf.
"""

from __future__ import annotations

import math
import os
import time
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._graph import KIND_DECISION, KIND_OR, KIND_SINK0, KIND_SINK1, CompiledGraph
from .core import Assignment, Nfbdd, OrNode, evaluate
from .transform import CONSTANT_FALSE, Normalized, normalize

INF = math.inf
_MASK64 = (1 << 64) - 1


def inv(x: float) -> float:
    """Reciprocal on (0, inf]: 1/inf = 0, 1/0 = inf."""
    if x == 0:
        return INF
    if x == INF:
        return 0.0
    return 1.0 / x


def lower_median(values: Sequence[float]) -> float:
    """Element at index floor((k-1)/2) of the sorted sequence."""
    s = sorted(values)
    if not s:
        raise ValueError("median of empty sequence")
    return s[(len(s) - 1) // 2]


@dataclass(frozen=True)
class FprasParams:
    epsilon: float
    delta: float
    kappa: float
    n_s: int
    n_t: int
    theta: int
    m: int
    seed: int = 0

    @property
    def n_copies(self) -> int:
        return self.n_s * self.n_t

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "kappa": self.kappa,
            "n_s": self.n_s,
            "n_t": self.n_t,
            "theta": self.theta,
            "m": self.m,
            "seed": self.seed,
        }


def params_from(epsilon: float, delta: float, n: int, size: int, seed: int = 0) -> FprasParams:
    """Parameter formulas of the outer algorithm; every ceiling floors at 1."""
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    # Exact rational arithmetic for the ceilings so that e.g. epsilon=0.5
    # (kappa=1/3) yields ceil(4n * 9) and not ceil(288.00000000000006).
    eps = Fraction(epsilon)
    kap = eps / (1 + eps)
    kappa = float(kap)
    n_s = max(1, math.ceil(4 * n / kap**2))
    n_t = max(1, math.ceil(8 * math.log(16 * size))) if size > 0 else 1
    theta = max(1, math.ceil(16 * n_s * n_t * (1 + kap) * size))
    m = max(1, math.ceil(8 * math.log(1 / delta)))
    return FprasParams(epsilon, delta, kappa, n_s, n_t, theta, m, seed)


# ---------------------------------------------------------------------------
# reference operations on explicit sample sets


def _iter_sorted(S: set[Assignment]):
    return sorted(S, key=lambda a: (a.mask, a.bits))


def reduce_set(S: set[Assignment], p: float, rng: np.random.Generator) -> set[Assignment]:
    """Keep each element independently with probability p.

    Elements are visited in sorted (mask, bits) order, one uniform draw
    per element, so the vectorized engine can reproduce the result.
    """
    if not 0 <= p <= 1:
        raise ValueError(f"keep probability {p} outside [0, 1]")
    return {s for s in _iter_sorted(S) if rng.random() < p}


def union_first_model(B: Nfbdd, q: int, sets: Sequence[set[Assignment]]) -> set[Assignment]:
    """Merge child sample sets of an Or node, keeping alpha only from the
    first child of which it is a model."""
    node = B.node(q)
    if not isinstance(node, OrNode):
        raise ValueError(f"node {q} is not an Or node")
    if len(sets) != len(node.children):
        raise ValueError("one sample set per child required")
    memo: dict[tuple[int, Assignment], int] = {}

    def is_model(c: int, a: Assignment) -> int:
        key = (c, a)
        if key not in memo:
            memo[key] = evaluate(B, c, a)
        return memo[key]

    out: set[Assignment] = set()
    for i, S_i in enumerate(sets):
        for a in _iter_sorted(S_i):
            if all(not is_model(node.children[j], a) for j in range(i)):
                out.add(a)
    return out


@dataclass
class SamplerState:
    """Per-node p values and explicit sample sets (reference engine)."""

    n_copies: int
    p: dict[int, float] = field(default_factory=dict)
    S: dict[int, list[set[Assignment]]] = field(default_factory=dict)
    Shat: dict[int, list[set[Assignment]]] = field(default_factory=dict)

    def init_sinks(self, sink1: int | None, sink0: int | None):
        if sink1 is not None:
            self.p[sink1] = 1.0
            self.S[sink1] = [{Assignment(0, 0)} for _ in range(self.n_copies)]
        if sink0 is not None:
            self.p[sink0] = INF
            self.S[sink0] = [set() for _ in range(self.n_copies)]


def step_decision(B: Nfbdd, q: int, state: SamplerState, rng: np.random.Generator) -> None:
    """Process a decision node: deterministic p, thinned and tagged child sets.

    Draw order: all copies of the 0-branch, then all copies of the 1-branch.
    """
    node = B.node(q)
    p0, p1 = state.p[node.lo], state.p[node.hi]
    p = inv(inv(p0) + inv(p1))
    halves: list[list[set[Assignment]]] = []
    for child, b, pc in ((node.lo, 0, p0), (node.hi, 1, p1)):
        ratio = 0.0 if pc == INF else p / pc
        halves.append(
            [{a.extend(node.var, b) for a in reduce_set(state.S[child][r], ratio, rng)} for r in range(state.n_copies)]
        )
    state.p[q] = p
    state.S[q] = [halves[0][r] | halves[1][r] for r in range(state.n_copies)]


def step_or(B: Nfbdd, q: int, state: SamplerState, rng: np.random.Generator, n_s: int, n_t: int) -> None:
    """Process an Or node: normalize child probabilities to rho, merge with
    the first-model rule, median-of-means re-estimate, final thinning."""
    node = B.node(q)
    children = node.children
    rho = min(state.p[c] for c in children)
    n_copies = n_s * n_t
    # child-major draw order, matching the vectorized engine
    thinned = [[reduce_set(state.S[c][r], rho / state.p[c], rng) for r in range(n_copies)] for c in children]
    hat = [union_first_model(B, q, [t[r] for t in thinned]) for r in range(n_copies)]
    M = [sum(len(hat[r]) for r in range(j * n_s, (j + 1) * n_s)) / (rho * n_s) for j in range(n_t)]
    med = lower_median(M)
    rho_hat = INF if med == 0 else 1.0 / med
    p = min(rho, rho_hat)
    state.p[q] = p
    state.Shat[q] = hat
    state.S[q] = [reduce_set(hat[r], p / rho, rng) for r in range(n_copies)]


# ---------------------------------------------------------------------------
# vectorized engine


class Observer:
    """Instrumentation hook; all callbacks are no-ops by default."""

    def on_node(self, node_id, p, sizes, rho=None, m_values=None, hat_sizes=None):
        pass

    def on_sets(self, node_id, sets):
        pass

    def on_hat_sets(self, node_id, sets):
        pass

    def on_interrupt(self, node_id):
        pass


@dataclass
class CoreOutcome:
    estimate: float
    interrupted: bool
    interrupt_node: Optional[int] = None
    max_set_size: int = 0
    p_source: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "interrupted": self.interrupted,
            "interrupt_node": self.interrupt_node,
            "max_set_size": self.max_set_size,
        }


def _node_rng(seed: int, run_index: int, pos: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=(seed & _MASK64, run_index, pos))
    return np.random.Generator(np.random.Philox(ss))


def _sorted_set(bits: np.ndarray, owner: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((bits, owner))
    return bits[order], owner[order]


def _to_assignment_sets(bits, owner, mask: int, n_copies: int) -> list[set[Assignment]]:
    out: list[set[Assignment]] = [set() for _ in range(n_copies)]
    for b, r in zip(bits, owner):
        out[int(r)].add(Assignment(int(b), mask))
    return out


def core_run(
    graph: CompiledGraph,
    params: FprasParams,
    run_index: int = 0,
    observer: Observer | None = None,
    theta: float | None = None,
    keep_sets: bool = False,
) -> CoreOutcome:
    """One interruptible bottom-up pass; returns 1/p(source) or 0 on interrupt.

    Randomness is drawn from a counter-based substream per (seed, run
    index, node position), so results do not depend on scheduling.
    """
    N = params.n_copies
    cap = params.theta if theta is None else theta
    n_nodes = len(graph.order)
    pvals = np.zeros(n_nodes)
    sets: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    B = graph.nfbdd
    max_size = 0

    # last position at which each node's sets are still needed
    last_use = [pos for pos in range(n_nodes)]
    for pos in range(n_nodes):
        for c in graph.children_pos(pos):
            last_use[c] = max(last_use[c], pos)

    for pos in range(n_nodes):
        kind = graph.node_kind(pos)
        if kind in (KIND_SINK0, KIND_SINK1):
            if kind == KIND_SINK1:
                pvals[pos] = 1.0
                sets[pos] = (np.zeros(N, dtype=np.uint64), np.arange(N, dtype=np.int64))
                size = 1
            else:
                pvals[pos] = INF
                sets[pos] = (np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.int64))
                size = 0
            max_size = max(max_size, size)
            if observer is not None:
                observer.on_node(graph.order[pos], pvals[pos], np.full(N, size, dtype=np.int64))
                if keep_sets:
                    bits, owner = sets[pos]
                    observer.on_sets(graph.order[pos], _to_assignment_sets(bits, owner, 0, N))
            if size >= cap:
                if observer is not None:
                    observer.on_interrupt(graph.order[pos])
                return CoreOutcome(0.0, True, graph.order[pos], max_size)
            continue

        rng = _node_rng(params.seed, run_index, pos)
        node_id = graph.order[pos]
        mask = B.var_mask(node_id)
        rho = None
        m_values = None
        hat_sizes = None

        if kind == KIND_DECISION:
            children = graph.children_pos(pos)
            hi_pos, lo_pos = int(children[0]), int(children[1])
            p = inv(inv(pvals[lo_pos]) + inv(pvals[hi_pos]))
            bit = np.uint64(1 << graph.varbit[pos])
            pieces_b, pieces_o = [], []
            for child_pos, set_bit in ((lo_pos, 0), (hi_pos, 1)):
                cb, co = sets[child_pos]
                pc = pvals[child_pos]
                ratio = 0.0 if pc == INF else p / pc
                keep = rng.random(len(cb)) < ratio
                nb = cb[keep]
                if set_bit:
                    nb = nb | bit
                pieces_b.append(nb)
                pieces_o.append(co[keep])
            bits, owner = _sorted_set(np.concatenate(pieces_b), np.concatenate(pieces_o))
        else:
            children = [int(c) for c in graph.children_pos(pos)]
            rho = float(min(pvals[c] for c in children))
            pieces_b, pieces_o = [], []
            for i, cpos in enumerate(children):
                cb, co = sets[cpos]
                keep = rng.random(len(cb)) < rho / pvals[cpos]
                sb, so = cb[keep], co[keep]
                if i and len(sb):
                    dominated = np.zeros(len(sb), dtype=np.uint8)
                    for j in children[:i]:
                        dominated |= graph.is_model(j, sb)
                        if dominated.all():
                            break
                    free = dominated == 0
                    sb, so = sb[free], so[free]
                pieces_b.append(sb)
                pieces_o.append(so)
            hat_bits, hat_owner = _sorted_set(np.concatenate(pieces_b), np.concatenate(pieces_o))
            hat_sizes = np.bincount(hat_owner, minlength=N)
            m_values = hat_sizes.reshape(params.n_t, params.n_s).sum(axis=1) / (rho * params.n_s)
            med = lower_median(m_values.tolist())
            rho_hat = INF if med == 0 else 1.0 / med
            p = min(rho, rho_hat)
            if observer is not None and keep_sets:
                observer.on_hat_sets(node_id, _to_assignment_sets(hat_bits, hat_owner, mask, N))
            keep = rng.random(len(hat_bits)) < p / rho
            bits, owner = hat_bits[keep], hat_owner[keep]

        pvals[pos] = p
        sets[pos] = (bits, owner)
        sizes = np.bincount(owner, minlength=N)
        size_max = int(sizes.max()) if len(sizes) else 0
        max_size = max(max_size, size_max)
        if observer is not None:
            observer.on_node(node_id, p, sizes, rho=rho, m_values=m_values, hat_sizes=hat_sizes)
            if keep_sets:
                observer.on_sets(node_id, _to_assignment_sets(bits, owner, mask, N))
        if size_max >= cap:
            if observer is not None:
                observer.on_interrupt(node_id)
            return CoreOutcome(0.0, True, node_id, max_size)
        # eager drop once no pending parent needs the sets
        for c in set(graph.children_pos(pos).tolist()):
            if last_use[c] == pos:
                sets.pop(c, None)

    p_src = float(pvals[graph.source_pos])
    return CoreOutcome(inv(p_src), False, None, max_size, p_source=p_src)


# ---------------------------------------------------------------------------
# outer algorithm


@dataclass
class RunOutcome:
    estimate: float
    interrupted: bool
    millis: float

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "interrupted": self.interrupted, "millis": self.millis}


@dataclass
class CountReport:
    estimate: float
    exact: Optional[int]
    epsilon: float
    delta: float
    seed: int
    params: Optional[FprasParams]
    runs: list[RunOutcome]
    interrupted_runs: int
    wall_millis: float

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {
            "estimate": self.estimate,
            "exact": self.exact,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "params": self.params.to_dict() if self.params else None,
            "runs": [
                {"estimate": r.estimate, "interrupted": r.interrupted, **({"millis": r.millis} if include_timings else {})}
                for r in self.runs
            ],
            "interrupted_runs": self.interrupted_runs,
        }
        if include_timings:
            d["wall_millis"] = self.wall_millis
        return d


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("NFBDD_THREADS", "1")
        workers = int(env)
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, workers)


def approx_count(
    B: Nfbdd,
    epsilon: float,
    delta: float,
    seed: int,
    workers: int | None = None,
    use_theta: bool = True,
    observer: Observer | None = None,
    keep_sets: bool = False,
) -> CountReport:
    """Normalize, derive parameters, run m independent core passes, return
    the lower median of their estimates.

    Unsatisfiable inputs and the 0-variable tautology are answered exactly
    with zero core runs.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    t0 = time.perf_counter()
    nf = normalize(B)
    if nf is CONSTANT_FALSE:
        return CountReport(0.0, 0, epsilon, delta, seed, None, [], 0, (time.perf_counter() - t0) * 1000)
    assert isinstance(nf, Normalized)
    if nf.diagram.size == 0:
        # source is the 1-sink: constant true over zero variables
        return CountReport(1.0, 1, epsilon, delta, seed, None, [], 0, (time.perf_counter() - t0) * 1000)
    params = params_from(epsilon, delta, B.n_vars, nf.diagram.size, seed)
    graph = CompiledGraph(nf.diagram, nf.layers)
    theta = None if use_theta else INF

    def one(j: int) -> RunOutcome:
        t = time.perf_counter()
        out = core_run(graph, params, run_index=j, observer=observer, theta=theta, keep_sets=keep_sets)
        return RunOutcome(out.estimate, out.interrupted, (time.perf_counter() - t) * 1000)

    nw = resolve_workers(workers)
    if nw == 1:
        runs = [one(j) for j in range(params.m)]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            runs = list(pool.map(one, range(params.m)))
    estimate = lower_median([r.estimate for r in runs])
    return CountReport(
        estimate,
        None,
        epsilon,
        delta,
        seed,
        params,
        runs,
        sum(r.interrupted for r in runs),
        (time.perf_counter() - t0) * 1000,
    )
