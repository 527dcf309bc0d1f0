import math
import os

import numpy as np
import pytest

from adiheat import kernels
from adiheat.parallel import (BenchReport, BenchRow, ExecPlan, LineError, ordered_max, parallel_for_lines,
                              run_benchmark, static_chunks)
from adiheat.solver import ADISolver, HeatProblem
from adiheat.source import SourceSpec


def test_block_chunks():
    chunks = static_chunks(1210, ExecPlan(4))
    assert len(chunks) == 4
    assert max(c.size for c in chunks) <= math.ceil(1210 / 4)
    np.testing.assert_array_equal(np.concatenate(chunks), np.arange(1210))


def test_interleave_chunks():
    chunks = static_chunks(10, ExecPlan(3, "static-interleave"))
    np.testing.assert_array_equal(chunks[1], [1, 4, 7])
    assert sorted(np.concatenate(chunks).tolist()) == list(range(10))


def test_zero_lines_is_noop():
    calls = []
    assert parallel_for_lines(0, ExecPlan(8), calls.append) == []
    assert calls == []


def test_results_in_line_order():
    assert parallel_for_lines(50, ExecPlan(4), lambda i: i * i) == [i * i for i in range(50)]


def test_lowest_failing_line_reported():
    def body(i):
        if i in (7, 31):
            raise ValueError(i)
        return i

    with pytest.raises(LineError) as exc:
        parallel_for_lines(40, ExecPlan(4), body)
    assert exc.value.line == 7


def test_invalid_plan():
    with pytest.raises(ValueError):
        ExecPlan(0)
    with pytest.raises(ValueError):
        ExecPlan(2, "dynamic")


def test_ordered_max():
    assert ordered_max(np.array([0.1, 3.0, 2.0])) == 3.0
    assert math.isnan(ordered_max(np.array([0.1, np.nan, 2.0])))
    assert ordered_max(np.array([])) == 0.0


@pytest.mark.parametrize("backend", kernels.available())
@pytest.mark.parametrize("chunking", ["static-block", "static-interleave"])
def test_worker_count_is_invisible(backend, chunking, small_paper_grid, synthetic_layers, rng):
    p = HeatProblem(small_paper_grid, synthetic_layers, SourceSpec(0.1, 0.01, 1e-4, I0=0.5742))
    T0 = np.where(small_paper_grid.mask, rng.uniform(4.2, 40.0, small_paper_grid.shape), 4.2)
    out = []
    for w in (1, 3, 8):
        s = ADISolver(p, ExecPlan(w, chunking), backend=backend)
        T, t = T0, 0.0
        for _ in range(3):
            T, tau = s.step(T, t)
            t += tau
        out.append(T)
    assert all(np.array_equal(out[0], o) for o in out[1:])


def test_benchmark_single_worker(small_paper_grid, synthetic_layers):
    p = HeatProblem(small_paper_grid, synthetic_layers, SourceSpec(0.1, 0.01, 1e-4))
    rep = run_benchmark(p, [1], steps=2)
    assert rep.speedup(1) == 1.0
    assert rep.rows[0].efficiency == 1.0


def test_benchmark_flags_oversubscription(small_paper_grid, synthetic_layers, tmp_path):
    p = HeatProblem(small_paper_grid, synthetic_layers, SourceSpec(0.1, 0.01, 1e-4))
    w = (os.cpu_count() or 1) + 1
    rep = run_benchmark(p, [w], steps=1)
    assert [r.workers for r in rep.rows] == [1, w]
    assert rep.rows[1].oversubscribed
    for r in rep.rows:
        assert r.efficiency == pytest.approx(r.speedup / r.workers)
    rep.write_csv(tmp_path / "b.csv", "hdr")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "# hdr" and lines[2] == "workers,wall_s,speedup,efficiency"
    assert len(lines) == 5


def test_report_speedup_lookup():
    rep = BenchReport((2, 2), 1, "python", rows=[BenchRow(1, 2.0, 1.0, 1.0), BenchRow(2, 1.0, 2.0, 1.0)])
    assert rep.speedup(2) == 2.0
