"""Approximate model counting for non-deterministic read-once branching programs."""

from ._backend import backend_name
from .core import (
    SINK0,
    SINK1,
    Assignment,
    Decision,
    Nfbdd,
    OrNode,
    count_exact,
    enumerate_models,
    evaluate,
    layers,
    validate,
    vars_of,
)
from .formats import dnf_to_nfbdd, gen_random, parse_dnf, parse_nfbdd, serialize_nfbdd
from .fpras import CountReport, FprasParams, approx_count, core_run, params_from
from .transform import CONSTANT_FALSE, Normalized, normalize

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CONSTANT_FALSE",
    "CountReport",
    "Decision",
    "FprasParams",
    "Nfbdd",
    "Normalized",
    "OrNode",
    "SINK0",
    "SINK1",
    "approx_count",
    "backend_name",
    "core_run",
    "count_exact",
    "dnf_to_nfbdd",
    "enumerate_models",
    "evaluate",
    "gen_random",
    "layers",
    "normalize",
    "params_from",
    "parse_dnf",
    "parse_nfbdd",
    "serialize_nfbdd",
    "validate",
    "vars_of",
]
