"""Benchmark the compiled evaluation kernel against the pure-Python fallback.

Two measurements:

* raw eval_many throughput (the union step's membership kernel) on batches
  of random total assignments;
* end-to-end core_run latency at realistic sampler parameters, once per
  backend (the backend is chosen at import, so the python side runs in a
  subprocess with NFBDD_PURE=1).

Usage: python3 benchmarks/bench_backends.py [--n 8] [--edges 14] [--seed 45]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_eval_many(kernels, graph, bits, repeats):
    # warm up, then best-of timing
    kernels.eval_many(graph.kind, graph.varbit, graph.ch_ptr, graph.ch_idx, graph.source_pos, bits)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.eval_many(graph.kind, graph.varbit, graph.ch_ptr, graph.ch_idx, graph.source_pos, bits)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_core_run(args_ns):
    """Runs in-process; reports per-run milliseconds for the active backend."""
    from nfbdd import backend_name, gen_random
    from nfbdd._graph import CompiledGraph
    from nfbdd.fpras import core_run, params_from
    from nfbdd.transform import normalize

    B = gen_random(args_ns.n, args_ns.edges, args_ns.seed)
    nf = normalize(B)
    graph = CompiledGraph(nf.diagram, nf.layers)
    params = params_from(0.5, 0.25, B.n_vars, nf.diagram.size)
    core_run(graph, params, run_index=0)  # warm up
    t0 = time.perf_counter()
    reps = 5
    for j in range(reps):
        core_run(graph, params, run_index=j)
    per_run = (time.perf_counter() - t0) / reps * 1000
    return {"backend": backend_name(), "core_run_ms": per_run, "size": nf.diagram.size, "n_copies": params.n_copies}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--edges", type=int, default=14)
    ap.add_argument("--seed", type=int, default=45)
    ap.add_argument("--batch", type=int, default=1 << 16)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--subprocess-core-run", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.subprocess_core_run:
        print(json.dumps(bench_core_run(args)))
        return

    from nfbdd import backend_name, gen_random
    from nfbdd import _kernels_py
    from nfbdd._graph import CompiledGraph
    from nfbdd.transform import normalize

    if backend_name() != "cython":
        print("compiled kernel not available; build the extension first", file=sys.stderr)
        sys.exit(1)
    from nfbdd import _kernels

    B = gen_random(args.n, args.edges, args.seed)
    nf = normalize(B)
    graph = CompiledGraph(nf.diagram, nf.layers)
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 1 << B.n_vars, size=args.batch, dtype=np.uint64)

    t_cy = bench_eval_many(_kernels, graph, bits, args.repeats)
    t_py = bench_eval_many(_kernels_py, graph, bits, args.repeats)
    print(f"instance: n={B.n_vars} normalized size={nf.diagram.size}, batch={args.batch}")
    print(f"eval_many  cython: {t_cy*1e6:8.1f} us   python: {t_py*1e6:8.1f} us   speedup: {t_py/t_cy:5.2f}x")

    results = []
    for pure in ("0", "1"):
        env = os.environ.copy()
        env["NFBDD_PURE"] = pure
        proc = subprocess.run(
            [sys.executable, __file__, "--subprocess-core-run",
             "--n", str(args.n), "--edges", str(args.edges), "--seed", str(args.seed)],
            capture_output=True, text=True, env=env, check=True,
        )
        results.append(json.loads(proc.stdout))
    cy, py = results
    print(f"core_run   cython: {cy['core_run_ms']:8.2f} ms   python: {py['core_run_ms']:8.2f} ms   "
          f"speedup: {py['core_run_ms']/cy['core_run_ms']:5.2f}x   "
          f"({cy['n_copies']} copies, size {cy['size']})")


if __name__ == "__main__":
    main()
