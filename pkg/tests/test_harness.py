"""The statistical check harness itself, exercised at small scale."""

from nfbdd.formats import dnf_to_nfbdd, gen_random, parse_dnf
from nfbdd.harness import (
    check_guarantee,
    check_divergence_bound,
    check_path_consistency,
    check_reduce_distribution,
    check_unbiased_or,
    check_union_oracle,
    derive_seed,
)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)

    def test_key_sensitive(self):
        seeds = {derive_seed(7, i, t) for i in range(4) for t in range(4)}
        assert len(seeds) == 16

    def test_in_range(self):
        s = derive_seed(-1, 0)
        assert 0 <= s < 1 << 63


class TestReduceDistribution:
    def test_passes_at_half(self):
        rep = check_reduce_distribution(4000, 0.5, seed=3)
        assert rep.ok, (rep.frequencies, rep.band)

    def test_band_scales_with_trials(self):
        a = check_reduce_distribution(1000, 0.3, seed=1)
        b = check_reduce_distribution(4000, 0.3, seed=1)
        assert (b.band[1] - b.band[0]) < (a.band[1] - a.band[0])


class TestUnionOracle:
    def test_small_corpus(self):
        corpus = [
            ("d1", dnf_to_nfbdd(parse_dnf("p dnf 3 2\n1 2 0\n-1 3 0\n"))),
            ("g1", gen_random(4, 14, 1)),
        ]
        rep = check_union_oracle(corpus, seed=5)
        assert rep.ok and rep.checked > 0


class TestDivergenceBound:
    def test_small_corpus(self):
        corpus = [("g1", gen_random(4, 14, 1)), ("g2", gen_random(5, 14, 2))]
        rep = check_divergence_bound(corpus)
        assert rep.ok
        assert rep.instances == 2 and rep.models_checked > 0


class TestPathConsistency:
    def test_one_instance(self):
        rep = check_path_consistency(gen_random(4, 14, 1), runs=3, seed=2)
        assert rep.ok and rep.runs == 3 and rep.samples_checked > 0


class TestUnbiasedness:
    def test_dnf_instance(self):
        B = dnf_to_nfbdd(parse_dnf("p dnf 4 3\n1 2 0\n-1 3 0\n2 -4 0\n"))
        rep = check_unbiased_or(B, copies=4000, seed=1)
        assert rep.oracle == 9
        assert rep.relative_error <= 0.1


class TestGuarantee:
    def test_tiny_run(self):
        corpus = [("g1", gen_random(4, 14, 1))]
        rep = check_guarantee(corpus, 1.0, 0.5, trials=3, seed=0)
        inst = rep.instances[0]
        assert inst.exact == 10
        assert inst.trials == 3 and inst.core_runs == 18
        assert inst.success_rate == 1.0

    def test_report_serializes(self):
        corpus = [("g1", gen_random(4, 14, 1))]
        rep = check_guarantee(corpus, 1.0, 0.5, trials=1, seed=0)
        d = rep.to_dict()
        assert d["instances"][0]["name"] == "g1"
        assert 0.0 <= d["interrupt_rate"] <= 1.0
