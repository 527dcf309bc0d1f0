"""Compare the compiled and numpy kernels on the same problem.

    python benchmarks/bench_backends.py [--config paper_cell] [--steps 20] [--workers 1,2,4]

Prints ms per ADI step for each backend and worker count, and the largest
difference between the fields the two backends produce.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from adiheat import kernels
from adiheat.config import parse_config
from adiheat.parallel import ExecPlan
from adiheat.solver import ADISolver


def time_steps(problem, backend, workers, steps):
    solver = ADISolver(problem, ExecPlan(workers=workers), backend=backend)
    T, t = problem.initial_field(), 0.0
    T, tau = solver.step(T, t)  # warm-up
    t += tau
    start = time.perf_counter()
    for _ in range(steps):
        T, tau = solver.step(T, t)
        t += tau
    return (time.perf_counter() - start) / steps, T


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="paper_cell")
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--workers", default="1,2,4")
    args = ap.parse_args(argv)
    problem = parse_config(args.config).build_problem()
    print(f"grid {problem.grid.nr}x{problem.grid.nz}, {args.steps} steps")
    fields = {}
    for backend in kernels.available():
        for w in (int(x) for x in args.workers.split(",")):
            sec, T = time_steps(problem, backend, w, args.steps)
            fields.setdefault(backend, T)
            print(f"{backend:7s} workers={w:2d} {1e3 * sec:9.2f} ms/step")
    if len(fields) == 2:
        a, b = fields.values()
        print(f"max |cython - python| = {np.max(np.abs(a - b)):.3e}")


if __name__ == "__main__":
    main()
