"""Derivation paths, last-common-prefix nodes, and divergence classes.

A model's derivation path is its canonical accepting path: decision nodes
follow the edge picked by the assignment, Or nodes route through the
first child of which the assignment is a model.  Paths run from the
1-sink up to the queried node.  This mirrors exactly the tie-break the
sampler's union step applies, and exists as a test surface.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    SINK1,
    Assignment,
    Decision,
    Nfbdd,
    NfbddError,
    OrNode,
    enumerate_models,
    evaluate,
)


class NotAModelError(NfbddError):
    pass


@dataclass(frozen=True)
class DerivationPath:
    """vertices[0] is the 1-sink, vertices[-1] the queried node.

    edges[i] connects vertices[i] and vertices[i+1]: the bit taken for a
    decision step, the child position for an Or step.
    """

    vertices: tuple[int, ...]
    edges: tuple[int, ...]

    def __post_init__(self):
        if len(self.edges) != len(self.vertices) - 1:
            raise ValueError("|edges| must be |vertices| - 1")


def derivation_path(B: Nfbdd, q: int, alpha: Assignment) -> DerivationPath:
    if not evaluate(B, q, alpha):
        raise NotAModelError(f"assignment is not a model of node {q}")
    vertices: list[int] = []
    edges: list[int] = []
    cur = q
    while True:
        node = B.node(cur)
        vertices.append(cur)
        if node == SINK1:
            break
        if isinstance(node, Decision):
            b = alpha.value(node.var)
            edges.append(b)
            cur = node.hi if b else node.lo
        elif isinstance(node, OrNode):
            for i, c in enumerate(node.children):
                if evaluate(B, c, alpha):
                    edges.append(i)
                    cur = c
                    break
            else:  # pragma: no cover - guarded by the model pre-check
                raise NotAModelError(f"no child of Or node {cur} models the assignment")
        else:
            raise NotAModelError("reached the 0-sink")
    vertices.reverse()
    edges.reverse()
    return DerivationPath(tuple(vertices), tuple(edges))


def lcpn(P: DerivationPath, Q: DerivationPath) -> int:
    """Deepest node where the vertex-and-edge prefixes of both paths agree.

    For ite(x, c, c) with the two paths taking opposite bits, the shared
    prefix ends at c: the vertices agree one step further but the edges do
    not, and the definition requires both.
    """
    return P.vertices[_lcp_index(P, Q)]


def _lcp_index(P: DerivationPath, Q: DerivationPath) -> int:
    i = 0
    limit = min(len(P.vertices), len(Q.vertices)) - 1
    while i < limit and P.vertices[i + 1] == Q.vertices[i + 1] and P.edges[i] == Q.edges[i]:
        i += 1
    return i


def divergence_classes(B: Nfbdd, q: int, alpha: Assignment) -> dict[int, set[Assignment]]:
    """Partition mod(q) by where each model's path diverges from alpha's.

    Maps each position l along alpha's path to the models whose lcpn with
    alpha's path is the l-th path vertex; alpha itself lands in the top
    class.  Enumerates mod(q) by brute force; test-only machinery.
    """
    base = derivation_path(B, q, alpha)
    classes: dict[int, set[Assignment]] = {l: set() for l in range(len(base.vertices))}
    for other in enumerate_models(B, q):
        other_path = derivation_path(B, q, other)
        classes[_lcp_index(base, other_path)].add(other)
    return classes
