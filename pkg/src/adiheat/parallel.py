"""Static work partitioning over independent grid lines, and the scaling benchmark.

Each half-step iteration solves one tridiagonal system per grid line; the
lines only read shared, frozen inputs and write disjoint slices of the
output, so they can run in any order.  Partitioning is static so that the
mapping of lines to workers, and hence the results, never depend on timing.
"""
from __future__ import annotations

import csv
import datetime as _dt
import logging
import os
import platform
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

CHUNKING = ("static-block", "static-interleave")


@dataclass(frozen=True)
class ExecPlan:
    workers: int = 1
    chunking: str = "static-block"
    pin_hint: bool | None = None

    def __post_init__(self):
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.chunking not in CHUNKING:
            raise ValueError(f"chunking must be one of {CHUNKING}, got {self.chunking!r}")
        object.__setattr__(self, "workers", int(self.workers))

    @property
    def interleave(self) -> bool:
        return self.chunking == "static-interleave"


class LineError(RuntimeError):
    """A line body failed; ``line`` is the index of the first failing line."""

    def __init__(self, line: int, cause: BaseException):
        super().__init__(f"line {line} failed: {cause!r}")
        self.line = line
        self.__cause__ = cause


def static_chunks(count: int, plan: ExecPlan) -> list[np.ndarray]:
    """Line indices assigned to each worker (empty workers dropped)."""
    idx = np.arange(count)
    n = min(plan.workers, max(count, 1))
    if plan.interleave:
        parts = [idx[w::n] for w in range(n)]
    else:
        size = -(-count // n) if count else 0
        parts = [idx[w * size:(w + 1) * size] for w in range(n)]
    return [p for p in parts if p.size]


_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


def _pool(workers: int) -> ThreadPoolExecutor:
    with _pools_lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="adiheat")
            _pools[workers] = pool
        return pool


def parallel_for_blocks(count: int, plan: ExecPlan, body: Callable[[np.ndarray], None]) -> None:
    """Run ``body(lines)`` once per worker block and wait for all of them."""
    chunks = static_chunks(count, plan)
    if not chunks:
        return
    if len(chunks) == 1:
        body(chunks[0])
        return
    futures = [_pool(len(chunks)).submit(body, c) for c in chunks]
    errors = []
    for c, f in zip(chunks, futures):
        exc = f.exception()
        if exc is not None:
            errors.append((int(getattr(exc, "line", c[0])), exc))
    if errors:
        line, exc = min(errors, key=lambda e: e[0])
        raise exc if isinstance(exc, LineError) else LineError(line, exc)


def parallel_for_lines(count: int, plan: ExecPlan, body: Callable[[int], object]) -> list:
    """Execute ``body(i)`` for every ``i < count``; returns the results in line order.

    A failing line is re-raised as :class:`LineError` once all workers have
    finished; if several lines fail, the lowest index is reported.
    """
    results: list = [None] * count

    def block(lines):
        for i in lines:
            try:
                results[i] = body(int(i))
            except Exception as exc:
                raise LineError(int(i), exc) from exc

    parallel_for_blocks(count, plan, block)
    return results


def ordered_max(partials: np.ndarray) -> float:
    """Max over per-line partial maxima, left to right."""
    m = 0.0
    for v in partials.tolist():
        if v > m or v != v:
            m = v
    return m


@dataclass
class BenchRow:
    workers: int
    wall_s: float
    speedup: float
    efficiency: float
    oversubscribed: bool = False


@dataclass
class BenchReport:
    grid: tuple[int, int]
    steps: int
    backend: str
    rows: list[BenchRow] = field(default_factory=list)
    cpu_count: int = field(default_factory=lambda: os.cpu_count() or 1)
    date: str = field(default_factory=lambda: _dt.datetime.now().isoformat(timespec="seconds"))
    machine: str = field(default_factory=platform.processor)

    def speedup(self, workers: int) -> float:
        return next(r.speedup for r in self.rows if r.workers == workers)

    def write_csv(self, path, header: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write(f"# grid={self.grid[0]}x{self.grid[1]} steps={self.steps} backend={self.backend} "
                     f"cpu_count={self.cpu_count} date={self.date}\n")
            w = csv.writer(fh)
            w.writerow(["workers", "wall_s", "speedup", "efficiency"])
            for r in self.rows:
                w.writerow([r.workers, repr(r.wall_s), repr(r.speedup), repr(r.efficiency)])


def run_benchmark(problem, worker_counts, steps: int, t0: float = 0.0, backend=None,
                  repeats: int = 1) -> BenchReport:
    """Time ``steps`` ADI steps from the same initial state for each worker count.

    One untimed warm-up step precedes each measurement.  ``problem`` is a
    :class:`~adiheat.solver.HeatProblem`.
    """
    from .solver import ADISolver

    counts = [int(w) for w in worker_counts]
    if not counts or counts[0] != 1:
        counts = [1] + [w for w in counts if w != 1]
    T_init = problem.initial_field()
    report = None
    times = {}
    for w in counts:
        solver = ADISolver(problem, ExecPlan(workers=w), backend=backend)
        if report is None:
            report = BenchReport(grid=(problem.grid.nr, problem.grid.nz), steps=steps,
                                 backend=solver.backend.NAME)
        if w > report.cpu_count:
            log.warning("benchmark: %d workers exceed %d available cores", w, report.cpu_count)
        best = np.inf
        for _ in range(max(1, repeats)):
            solver.step(T_init, t0)
            T, t = T_init, t0
            start = time.perf_counter()
            for _ in range(steps):
                T, tau = solver.step(T, t)
                t += tau
            best = min(best, time.perf_counter() - start)
        times[w] = best
    base = times[1]
    for w in counts:
        sp = base / times[w]
        report.rows.append(BenchRow(w, times[w], sp, sp / w, oversubscribed=w > report.cpu_count))
    return report
