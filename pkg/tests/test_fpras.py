"""Sampler operations, parameter formulas, core runs, and the outer counter."""

import math

import numpy as np
import pytest

from nfbdd._graph import CompiledGraph
from nfbdd.core import SINK0, SINK1, Assignment, Decision, Nfbdd, OrNode, Sink, count_exact
from nfbdd.formats import dnf_to_nfbdd, gen_random, parse_dnf
from nfbdd.fpras import (
    INF,
    FprasParams,
    SamplerState,
    _node_rng,
    approx_count,
    core_run,
    inv,
    lower_median,
    params_from,
    reduce_set,
    resolve_workers,
    step_decision,
    step_or,
    union_first_model,
)
from nfbdd.harness import RecordingObserver
from nfbdd.transform import CONSTANT_FALSE, normalize


def rng_of(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class TestScalars:
    def test_inv(self):
        assert inv(0) == INF
        assert inv(INF) == 0.0
        assert inv(4.0) == 0.25

    def test_lower_median(self):
        assert lower_median([3.0, 1.0, 2.0]) == 2.0
        assert lower_median([4.0, 1.0, 3.0, 2.0]) == 2.0
        assert lower_median([5.0]) == 5.0
        with pytest.raises(ValueError):
            lower_median([])


class TestParams:
    def test_known_values(self):
        p = params_from(1.0, 0.5, 4, 10)
        assert (p.kappa, p.n_s, p.n_t, p.m, p.theta) == (0.5, 64, 41, 6, 629760)

    def test_exact_rational_ceilings(self):
        # kappa = 1/3: 4*8/kappa^2 is exactly 288, not 288.0000000000001
        assert params_from(0.5, 0.25, 8, 10).n_s == 288

    def test_floors_at_one(self):
        p = params_from(100.0, 0.9, 0, 0)
        assert p.n_s >= 1 and p.n_t >= 1 and p.theta >= 1 and p.m >= 1

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            params_from(0.0, 0.5, 4, 10)
        with pytest.raises(ValueError):
            params_from(1.0, 1.0, 4, 10)

    def test_n_copies(self):
        p = params_from(1.0, 0.5, 4, 10)
        assert p.n_copies == p.n_s * p.n_t


class TestReduceSet:
    def test_p_one_keeps_everything(self):
        S = {Assignment.total(b, 3) for b in range(8)}
        assert reduce_set(S, 1.0, rng_of()) == S

    def test_p_zero_empties(self):
        S = {Assignment.total(b, 3) for b in range(8)}
        assert reduce_set(S, 0.0, rng_of()) == set()

    def test_subset_of_input(self):
        S = {Assignment.total(b, 4) for b in range(16)}
        out = reduce_set(S, 0.5, rng_of(1))
        assert out <= S

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            reduce_set(set(), 1.5, rng_of())


def union_fixture():
    """Or over two chains on (x1, x2): mod(c1) = {00, 01}, mod(c2) = {01, 11}."""
    nodes = [
        SINK0,  # 0
        SINK1,  # 1
        Decision(2, 1, 1),  # 2: read x2, both branches accept
        Decision(1, 0, 2),  # 3: c1 = not x1
        Decision(1, 1, 1),  # 4: read x1, both branches accept
        Decision(2, 4, 0),  # 5: c2 = x2
        OrNode((3, 5)),  # 6
    ]
    return Nfbdd(2, nodes, 6)


class TestUnionFirstModel:
    def test_first_child_wins(self):
        B = union_fixture()
        a00 = Assignment.total(0b00, 2)
        a01 = Assignment.total(0b10, 2)  # x1=0, x2=1
        a11 = Assignment.total(0b11, 2)
        out = union_first_model(B, 6, [{a00}, {a01, a11}])
        # a01 models c1 too, so its copy arriving from c2 is dropped
        assert out == {a00, a11}

    def test_requires_or_node(self):
        B = union_fixture()
        with pytest.raises(ValueError):
            union_first_model(B, 3, [set()])

    def test_one_set_per_child(self):
        B = union_fixture()
        with pytest.raises(ValueError):
            union_first_model(B, 6, [set()])


class TestStepDecision:
    def test_ite_tt_halving(self):
        # ite(x1, T, T): p = 1/2, each sink copy survives per side w.p. 1/2
        B = Nfbdd(1, [SINK0, SINK1, Decision(1, 1, 1)], 2)
        n = 10_000
        state = SamplerState(n)
        state.init_sinks(1, 0)
        step_decision(B, 2, state, rng_of(5))
        assert state.p[2] == 0.5
        lo = Assignment.from_dict({1: 0})
        hi = Assignment.from_dict({1: 1})
        f_lo = sum(lo in S for S in state.S[2]) / n
        f_hi = sum(hi in S for S in state.S[2]) / n
        assert abs(f_lo - 0.5) < 0.02 and abs(f_hi - 0.5) < 0.02

    def test_zero_sink_branch(self):
        # ite(x1, T, 0): p stays 1 and every copy keeps the tagged model
        B = Nfbdd(1, [SINK0, SINK1, Decision(1, 1, 0)], 2)
        state = SamplerState(64)
        state.init_sinks(1, 0)
        step_decision(B, 2, state, rng_of())
        assert state.p[2] == 1.0
        want = {Assignment.from_dict({1: 1})}
        assert all(S == want for S in state.S[2])


class TestStepOr:
    def test_singleton_child_is_identity(self):
        # Or with a single child of known p: rho = p, no thinning, same sets
        B = union_fixture()
        nodes = list(B.nodes[:4]) + [OrNode((3,))]
        C = Nfbdd(2, nodes, 4)
        n_s, n_t = 4, 1
        state = SamplerState(n_s * n_t)
        state.p[3] = 0.25
        state.S[3] = [{Assignment.total(0b00, 2)} for _ in range(4)]
        step_or(C, 4, state, rng_of(), n_s, n_t)
        # M = 4 / (0.25 * 4) = 4, rho_hat = 1/4, p = min(rho, rho_hat) = 1/4
        assert state.p[4] == 0.25
        assert state.S[4] == state.Shat[4]
        assert all(S == {Assignment.total(0b00, 2)} for S in state.S[4])

    def test_empty_sets_give_p_inf(self):
        B = union_fixture()
        nodes = list(B.nodes[:4]) + [OrNode((3,))]
        C = Nfbdd(2, nodes, 4)
        state = SamplerState(4)
        state.p[3] = 0.5
        state.S[3] = [set() for _ in range(4)]
        step_or(C, 4, state, rng_of(), 4, 1)
        # median of means is 0, so rho_hat = inf and p = rho
        assert state.p[4] == 0.5
        assert all(S == set() for S in state.S[4])


def reference_run(nf, params, run_index=0):
    """Layer walk with the explicit-set reference operations, consuming the
    same per-node substreams as the vectorized engine."""
    D = nf.diagram
    graph = CompiledGraph(D, nf.layers)
    state = SamplerState(params.n_copies)
    sink1 = next((q for q, nd in enumerate(D.nodes) if nd == SINK1), None)
    sink0 = next((q for q, nd in enumerate(D.nodes) if nd == SINK0), None)
    state.init_sinks(sink1, sink0)
    for pos, q in enumerate(graph.order):
        node = D.nodes[q]
        if isinstance(node, Sink):
            continue
        rng = _node_rng(params.seed, run_index, pos)
        if isinstance(node, Decision):
            step_decision(D, q, state, rng)
        else:
            step_or(D, q, state, rng, params.n_s, params.n_t)
    return state, graph


class TestEngineMatchesReference:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_identical_sets_and_probabilities(self, seed):
        nf = normalize(gen_random(4, 12, seed))
        if nf is CONSTANT_FALSE:
            pytest.skip("unsatisfiable draw")
        params = FprasParams(1.0, 0.5, 0.5, 6, 3, 10**9, 1, seed=seed + 100)
        state, graph = reference_run(nf, params)
        obs = RecordingObserver()
        core_run(graph, params, run_index=0, observer=obs, keep_sets=True)
        for q in graph.order:
            if isinstance(nf.diagram.nodes[q], Sink):
                continue
            assert obs.records[q]["p"] == state.p[q], f"p mismatch at {q}"
            assert obs.sets[q] == state.S[q], f"set mismatch at {q}"


class TestCoreRun:
    def graph_of(self, B):
        nf = normalize(B)
        return CompiledGraph(nf.diagram, nf.layers), nf

    def test_estimate_close_on_easy_instance(self):
        B = dnf_to_nfbdd(parse_dnf("p dnf 4 3\n1 2 0\n-1 3 0\n2 -4 0\n"))
        graph, _ = self.graph_of(B)
        params = FprasParams(1.0, 0.5, 0.5, 64, 41, 10**9, 1, seed=0)
        out = core_run(graph, params)
        assert not out.interrupted
        assert abs(out.estimate - 9) / 9 < 0.25

    def test_theta_one_interrupts_at_sink(self):
        B = gen_random(4, 14, 1)
        graph, nf = self.graph_of(B)
        params = FprasParams(1.0, 0.5, 0.5, 4, 2, 10**9, 1, seed=0)
        out = core_run(graph, params, theta=1)
        assert out.interrupted and out.estimate == 0.0
        assert nf.diagram.nodes[out.interrupt_node] == SINK1

    def test_determinism_per_run_index(self):
        B = gen_random(5, 14, 2)
        graph, _ = self.graph_of(B)
        params = FprasParams(1.0, 0.5, 0.5, 16, 4, 10**9, 1, seed=9)
        a = core_run(graph, params, run_index=3)
        b = core_run(graph, params, run_index=3)
        c = core_run(graph, params, run_index=4)
        assert a.estimate == b.estimate
        assert a.estimate != c.estimate or a.max_set_size != c.max_set_size


class TestApproxCount:
    def test_validates_arguments(self):
        B = gen_random(4, 10, 0)
        with pytest.raises(ValueError):
            approx_count(B, -1.0, 0.5, 0)
        with pytest.raises(ValueError):
            approx_count(B, 1.0, 0.0, 0)

    def test_accuracy(self):
        B = gen_random(5, 14, 2)
        exact = count_exact(B)
        rep = approx_count(B, 0.5, 0.25, seed=11)
        assert abs(rep.estimate - exact) <= 0.5 * exact

    def test_constant_false(self):
        B = Nfbdd(2, [SINK0, Decision(1, 0, 0)], 1)
        rep = approx_count(B, 1.0, 0.5, seed=0)
        assert rep.estimate == 0.0 and rep.exact == 0 and rep.runs == []

    def test_zero_variable_tautology(self):
        rep = approx_count(Nfbdd(0, [SINK1], 0), 1.0, 0.5, seed=0)
        assert rep.estimate == 1.0 and rep.exact == 1 and rep.runs == []

    def test_report_independent_of_workers(self):
        B = gen_random(4, 14, 9)
        a = approx_count(B, 1.0, 0.5, seed=5, workers=1)
        b = approx_count(B, 1.0, 0.5, seed=5, workers=4)
        assert a.to_dict(include_timings=False) == b.to_dict(include_timings=False)

    def test_run_count_is_m(self):
        B = gen_random(4, 14, 9)
        rep = approx_count(B, 1.0, 0.5, seed=5)
        assert len(rep.runs) == rep.params.m == 6

    def test_resolve_workers(self, monkeypatch):
        monkeypatch.delenv("NFBDD_THREADS", raising=False)
        assert resolve_workers(None) == 1
        assert resolve_workers(3) == 3
        monkeypatch.setenv("NFBDD_THREADS", "2")
        assert resolve_workers(None) == 2
        assert resolve_workers(0) >= 1
