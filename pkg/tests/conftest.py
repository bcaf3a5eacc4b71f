"""Shared fixtures: the frozen instance corpus and the (expensive)
session-wide calibration run reused by several acceptance criteria."""

import pytest

from nfbdd import dnf_to_nfbdd, gen_random, parse_dnf

# Frozen generator corpus: (n_vars, seed) with target_edges=14, chosen so the
# normalized diagram stays small (size <= ~80) and the model count is
# non-trivial (strictly between 0 and 2^n).
GEN_CORPUS = [
    (4, 1),
    (4, 9),
    (5, 2),
    (5, 3),
    (6, 0),
    (6, 2),
    (7, 20),
    (7, 33),
    (8, 45),
    (8, 47),
]
TARGET_EDGES = 14

DNF_CORPUS = {
    "dnf_n4": "p dnf 4 3\n1 2 0\n-1 3 0\n2 -4 0\n",
    "dnf_n5": "p dnf 5 3\n1 -2 3 0\n2 4 0\n-3 5 0\n",
    "dnf_n6": "p dnf 6 3\n1 2 3 0\n-2 5 0\n4 -6 0\n",
    "dnf_n7": "p dnf 7 4\n1 -3 5 0\n2 6 0\n-4 7 0\n3 -5 0\n",
    "dnf_n8": "p dnf 8 3\n1 2 0\n-3 4 -5 0\n6 7 8 0\n",
}


def gen_instances():
    return [(f"gen_n{n}_s{s}", gen_random(n, TARGET_EDGES, s)) for n, s in GEN_CORPUS]


def dnf_instances():
    return [(name, dnf_to_nfbdd(parse_dnf(text))) for name, text in DNF_CORPUS.items()]


@pytest.fixture(scope="session")
def corpus():
    """15 satisfiable instances, n in [4, 8]: 10 generated + 5 DNF-compiled."""
    return gen_instances() + dnf_instances()


@pytest.fixture(scope="session")
def calibration(corpus):
    """One big guarantee check at epsilon=0.5, delta=0.25, 100 trials per
    instance; shared between the success-rate and interrupt-rate criteria."""
    from nfbdd.harness import check_guarantee

    return check_guarantee(corpus, 0.5, 0.25, trials=100, seed=2024)
