"""Statistical and property checks wiring the exact oracle, the path
machinery, and the instrumented sampler together.

Every check is deterministic given its seed and returns a report object
with a machine-readable verdict plus the raw statistics.  Thresholds
carry 3-4 sigma binomial slack below the guaranteed rates so finite-trial
noise cannot flake a passing configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._graph import CompiledGraph
from .core import Assignment, Nfbdd, OrNode, count_exact, enumerate_models
from .fpras import (
    FprasParams,
    Observer,
    approx_count,
    core_run,
    params_from,
    reduce_set,
    union_first_model,
)
from .paths import derivation_path
from .transform import CONSTANT_FALSE, Normalized, normalize


def derive_seed(master: int, *key: int) -> int:
    """Independent 63-bit subseed for (master, key...)."""
    ss = np.random.SeedSequence(entropy=(master & ((1 << 64) - 1), *key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class RecordingObserver(Observer):
    """Captures per-node probe records and, on request, full sample sets."""

    def __init__(self):
        self.records: dict[int, dict] = {}
        self.sets: dict[int, list[set[Assignment]]] = {}
        self.hat_sets: dict[int, list[set[Assignment]]] = {}
        self.interrupted_at: Optional[int] = None

    def on_node(self, node_id, p, sizes, rho=None, m_values=None, hat_sizes=None):
        self.records[node_id] = {
            "p": p,
            "sizes": np.asarray(sizes).copy(),
            "rho": rho,
            "m_values": None if m_values is None else np.asarray(m_values).copy(),
            "hat_sizes": None if hat_sizes is None else np.asarray(hat_sizes).copy(),
        }

    def on_sets(self, node_id, sets):
        self.sets[node_id] = sets

    def on_hat_sets(self, node_id, sets):
        self.hat_sets[node_id] = sets

    def on_interrupt(self, node_id):
        self.interrupted_at = node_id


# ---------------------------------------------------------------------------


@dataclass
class ReduceDistributionReport:
    p: float
    trials: int
    frequencies: list[float]
    band: tuple[float, float]
    max_abs_covariance: float
    covariance_band: float

    @property
    def ok(self) -> bool:
        lo, hi = self.band
        return all(lo <= f <= hi for f in self.frequencies) and self.max_abs_covariance <= self.covariance_band


def check_reduce_distribution(trials: int, p: float, seed: int = 0, set_size: int = 8) -> ReduceDistributionReport:
    """Per-element retention within 4 sigma of p, pairwise covariance near 0."""
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    elements = [Assignment.total(b, 4) for b in range(set_size)]
    S = set(elements)
    kept = np.zeros((trials, set_size), dtype=np.uint8)
    for t in range(trials):
        out = reduce_set(S, p, rng)
        for i, e in enumerate(elements):
            kept[t, i] = e in out
    freqs = kept.mean(axis=0)
    sigma = math.sqrt(p * (1 - p) / trials)
    band = (p - 4 * sigma, p + 4 * sigma)
    centered = kept - freqs
    cov = centered.T @ centered / trials
    off = cov - np.diag(np.diag(cov))
    # var of an empirical covariance of independent Bernoullis is ~ (p(1-p))^2/trials
    cov_band = 4 * p * (1 - p) / math.sqrt(trials)
    return ReduceDistributionReport(p, trials, freqs.tolist(), band, float(np.abs(off).max()), cov_band)


# ---------------------------------------------------------------------------


@dataclass
class UnionOracleReport:
    checked: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.checked > 0 and not self.mismatches


def check_union_oracle(instances: Sequence[tuple[str, Nfbdd]], seed: int = 0, subsets_per_node: int = 8) -> UnionOracleReport:
    """union_first_model output must match the direct first-model rule
    computed from brute-force model sets of the children."""
    report = UnionOracleReport()
    for name, B in instances:
        nf = normalize(B)
        if nf is CONSTANT_FALSE:
            continue
        D = nf.diagram
        for q in D.topo_order():
            node = D.nodes[q]
            if not isinstance(node, OrNode):
                continue
            child_models = [enumerate_models(D, c) for c in node.children]
            model_sets = [set(ms) for ms in child_models]
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=(seed, q))))
            for _ in range(subsets_per_node):
                sets = [{a for a in ms if rng.random() < 0.6} for ms in child_models]
                got = union_first_model(D, q, sets)
                want = set()
                for i, S_i in enumerate(sets):
                    for a in S_i:
                        if all(a not in model_sets[j] for j in range(i)):
                            want.add(a)
                report.checked += 1
                if got != want:
                    report.mismatches.append(f"{name}: Or node {q}")
    return report


# ---------------------------------------------------------------------------


@dataclass
class DivergenceBoundReport:
    instances: int = 0
    nodes_checked: int = 0
    models_checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.models_checked > 0 and not self.violations


def check_divergence_bound(instances: Sequence[tuple[str, Nfbdd]]) -> DivergenceBoundReport:
    """Exhaustive divergence-class bound: for every node q, model alpha, and
    path position l, |I(alpha, q, l)| * |mod(q_l)| <= |mod(q)|.

    Uses a prefix trie over derivation paths so each model's class sizes
    come out of one walk; equivalent to calling divergence_classes per
    model, which tests cross-check on small instances.
    """
    report = DivergenceBoundReport()
    for name, B in instances:
        nf = normalize(B)
        if nf is CONSTANT_FALSE:
            continue
        D = nf.diagram
        report.instances += 1
        mod_size = {q: len(enumerate_models(D, q)) for q in D.topo_order()}
        for q in D.topo_order():
            models = enumerate_models(D, q)
            paths = [derivation_path(D, q, a) for a in models]
            # trie over (vertex, incoming-edge) steps; counts per prefix
            root: dict = {"#": 0}
            for P in paths:
                cur = root
                cur["#"] += 1
                for j in range(len(P.edges)):
                    token = (P.vertices[j + 1], P.edges[j])
                    cur = cur.setdefault(token, {"#": 0})
                    cur["#"] += 1
            mq = mod_size[q]
            report.nodes_checked += 1
            for P in paths:
                report.models_checked += 1
                counts = []
                cur = root
                counts.append(cur["#"])
                for j in range(len(P.edges)):
                    cur = cur[(P.vertices[j + 1], P.edges[j])]
                    counts.append(cur["#"])
                top = len(P.vertices) - 1
                for ell in range(top + 1):
                    size = counts[ell] - (counts[ell + 1] if ell < top else 0)
                    if size * mod_size[P.vertices[ell]] > mq:
                        report.violations.append(
                            f"{name}: node {q}, position {ell}: {size} * {mod_size[P.vertices[ell]]} > {mq}"
                        )
    return report


# ---------------------------------------------------------------------------


@dataclass
class PathConsistencyReport:
    runs: int = 0
    samples_checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.samples_checked > 0 and not self.violations


def check_path_consistency(B: Nfbdd, runs: int, seed: int = 0, n_s: int = 8, n_t: int = 4) -> PathConsistencyReport:
    """Every sampled assignment must have its path restrictions present in
    the same-copy sample sets of every node along its derivation path."""
    report = PathConsistencyReport()
    nf = normalize(B)
    if nf is CONSTANT_FALSE:
        return report
    assert isinstance(nf, Normalized)
    D = nf.diagram
    graph = CompiledGraph(D, nf.layers)
    params = FprasParams(1.0, 0.5, 0.5, n_s, n_t, 10**9, 1, seed)
    for run in range(runs):
        obs = RecordingObserver()
        core_run(graph, params, run_index=run, observer=obs, keep_sets=True)
        report.runs += 1
        for node_id, per_r in obs.sets.items():
            for r, S in enumerate(per_r):
                for a in S:
                    P = derivation_path(D, node_id, a)
                    report.samples_checked += 1
                    for qj in P.vertices:
                        aj = a.restrict(D.var_mask(qj))
                        if aj not in obs.sets[qj][r]:
                            report.violations.append(f"run {run}: node {node_id}, copy {r}, missing at {qj}")
    return report


# ---------------------------------------------------------------------------


@dataclass
class UnbiasednessReport:
    node: int
    oracle: int
    copies: int
    empirical_mean: float
    relative_error: float

    @property
    def ok(self) -> bool:
        return self.relative_error <= 0.05


def check_unbiased_or(B: Nfbdd, copies: int, seed: int = 0, node: int | None = None) -> UnbiasednessReport:
    """Mean of rho^-1 |S-hat^r(q)| over all copies against the brute-force
    model count at an Or node (the source by default)."""
    nf = normalize(B)
    if nf is CONSTANT_FALSE:
        raise ValueError("constant-false instance")
    assert isinstance(nf, Normalized)
    D = nf.diagram
    graph = CompiledGraph(D, nf.layers)
    target = D.source if node is None else node
    if not isinstance(D.nodes[target], OrNode):
        raise ValueError(f"node {target} is not an Or node")
    params = FprasParams(1.0, 0.5, 0.5, copies, 1, 10**9, 1, seed)
    obs = RecordingObserver()
    core_run(graph, params, run_index=0, observer=obs, theta=math.inf)
    rec = obs.records[target]
    mean = float(rec["hat_sizes"].mean() / rec["rho"])
    oracle = len(enumerate_models(D, target))
    rel = abs(mean - oracle) / oracle
    return UnbiasednessReport(target, oracle, copies, mean, rel)


# ---------------------------------------------------------------------------


@dataclass
class InstanceResult:
    name: str
    exact: int
    trials: int
    successes: int
    mean_relative_error: float
    core_runs: int
    interrupted_runs: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "exact": self.exact,
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "mean_relative_error": self.mean_relative_error,
            "core_runs": self.core_runs,
            "interrupted_runs": self.interrupted_runs,
        }


@dataclass
class CalibrationReport:
    epsilon: float
    delta: float
    trials: int
    seed: int
    use_theta: bool
    instances: list[InstanceResult]

    @property
    def total_core_runs(self) -> int:
        return sum(i.core_runs for i in self.instances)

    @property
    def total_interrupted(self) -> int:
        return sum(i.interrupted_runs for i in self.instances)

    @property
    def interrupt_rate(self) -> float:
        total = self.total_core_runs
        return self.total_interrupted / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "trials": self.trials,
            "seed": self.seed,
            "use_theta": self.use_theta,
            "interrupt_rate": self.interrupt_rate,
            "total_core_runs": self.total_core_runs,
            "total_interrupted": self.total_interrupted,
            "instances": [i.to_dict() for i in self.instances],
        }


def check_guarantee(
    corpus: Sequence[tuple[str, Nfbdd]],
    epsilon: float,
    delta: float,
    trials: int,
    seed: int = 0,
    workers: int | None = None,
    use_theta: bool = True,
) -> CalibrationReport:
    """Per-instance success rate of the approximate counter against the
    brute-force oracle, over `trials` independently seeded calls."""
    results = []
    for idx, (name, B) in enumerate(corpus):
        exact = count_exact(B)
        successes = 0
        rel_errors = []
        core_runs = 0
        interrupted = 0
        for t in range(trials):
            rep = approx_count(B, epsilon, delta, derive_seed(seed, idx, t), workers=workers, use_theta=use_theta)
            core_runs += len(rep.runs)
            interrupted += rep.interrupted_runs
            if abs(rep.estimate - exact) <= epsilon * exact:
                successes += 1
            if exact:
                rel_errors.append(abs(rep.estimate - exact) / exact)
        results.append(
            InstanceResult(
                name,
                exact,
                trials,
                successes,
                float(np.mean(rel_errors)) if rel_errors else 0.0,
                core_runs,
                interrupted,
            )
        )
    return CalibrationReport(epsilon, delta, trials, seed, use_theta, results)
