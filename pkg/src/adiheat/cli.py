"""Command-line entry point: ``adiheat --config PATH [--mode simulate|bench|validate] ...``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config, shipped_configs
from .output import header_line, write_resampled, write_snapshot, write_trace
from .parallel import run_benchmark
from .runner import EvolutionAborted, evolve

log = logging.getLogger("adiheat")

PHASE_FLAGS = {"on": ("before_on",), "off": ("after_off",), "both": ("before_on", "after_off")}


def _workers(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or N,N,... got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("worker counts must be >= 1")
    return vals


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="adiheat",
        description="ADI solver for pulsed heating of a layered cylinder.",
        epilog=f"shipped configs: {', '.join(shipped_configs())}")
    p.add_argument("--config", required=True, help="config file, or the name of a shipped config")
    p.add_argument("--mode", choices=("simulate", "bench", "validate"), help="overrides the config's mode")
    p.add_argument("--workers", type=_workers, help="worker count (bench: comma-separated list)")
    p.add_argument("--t-end", type=_positive, help="end time in seconds")
    p.add_argument("--out", help="output directory (default: config output_dir, $ADIHEAT_OUT, ./out)")
    p.add_argument("--snapshot-phase", choices=tuple(PHASE_FLAGS), help="which source phases to snapshot")
    p.add_argument("--backend", choices=("cython", "python"), help="kernel implementation")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def apply_overrides(cfg: RunConfig, args, parser) -> RunConfig:
    runner, exec_cfg, bench = cfg.runner, cfg.exec, cfg.bench
    mode = args.mode or cfg.mode
    if args.workers:
        if mode == "bench":
            bench = dataclasses.replace(bench, workers=args.workers)
        elif len(args.workers) > 1:
            parser.error("--workers takes a single count outside bench mode")
        else:
            exec_cfg = dataclasses.replace(exec_cfg, workers=args.workers[0])
    if args.backend:
        exec_cfg = dataclasses.replace(exec_cfg, backend=args.backend)
    if args.t_end:
        runner = dataclasses.replace(runner, t_end=args.t_end)
    if args.snapshot_phase:
        runner = dataclasses.replace(runner, snapshot_phases=PHASE_FLAGS[args.snapshot_phase])
    out = args.out or cfg.output_dir or os.environ.get("ADIHEAT_OUT") or "out"
    return dataclasses.replace(cfg, runner=runner, exec=exec_cfg, bench=bench, output_dir=out, mode=mode)


def simulate(cfg: RunConfig, out: Path) -> int:
    problem = cfg.build_problem()
    h = cfg.sha256()
    rc = cfg.runner
    try:
        res = evolve(problem, rc.t_end, probes=rc.probes, detector=rc.detector, plan=cfg.exec.plan(),
                     backend=cfg.exec.backend, snapshot_phases=rc.snapshot_phases)
    except EvolutionAborted as exc:
        write_snapshot(exc.state.field, problem.grid, out / "aborted.csv", "csv", h)
        print(f"error: {exc}; last accepted state (t={exc.state.t:.9g}) written to {out / 'aborted.csv'}",
              file=sys.stderr)
        return 1
    st = res.state
    write_trace(res.trace_times, res.trace_values, out / "trace.csv", h)
    write_resampled(res.resampled(), problem.source.t_per, out / "trace_resampled.csv", h)
    for phase, (t, field) in res.snapshots.items():
        for fmt in rc.snapshot_formats:
            write_snapshot(field, problem.grid, out / f"snapshot_{phase}.{fmt}", fmt, h)
    for fmt in rc.snapshot_formats:
        write_snapshot(st.field, problem.grid, out / f"snapshot_final.{fmt}", fmt, h)
    print(f"stopped: {res.stop_reason} at t={st.t:.9g} after {st.step_count} steps "
          f"({len(st.period_buffer)} full periods)")
    rs = res.resampled()
    if rs.size:
        lo, hi = float(rs[-1].min()), float(rs[-1].max())
        print(f"last period probe range: [{lo:.6g}, {hi:.6g}]")
        if rc.band is not None:
            inside = rc.band[0] <= lo and hi <= rc.band[1]
            print(f"band [{rc.band[0]:g}, {rc.band[1]:g}]: {'inside' if inside else 'outside'}")
    return 0


def bench(cfg: RunConfig, out: Path) -> int:
    problem = cfg.build_problem()
    report = run_benchmark(problem, cfg.bench.workers, cfg.bench.steps, backend=cfg.exec.backend,
                           repeats=cfg.bench.repeats)
    path = out / "bench.csv"
    report.write_csv(path, header_line(cfg.sha256()))
    for r in report.rows:
        flag = "  (more workers than cores)" if r.oversubscribed else ""
        print(f"workers={r.workers:3d} wall={r.wall_s:.4f}s speedup={r.speedup:.3f} "
              f"efficiency={r.efficiency:.3f}{flag}")
    print(f"written {path}")
    return 0


def validate(cfg: RunConfig, out: Path) -> int:
    from .validation import all_passed, run_all

    results = run_all(backend=cfg.exec.backend)
    for r in results:
        print(r.line())
    return 0 if all_passed(results) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(parse_config(args.config), args, parser)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.yaml").write_text(f"# {header_line(cfg.sha256())}\n{cfg.dump()}")
    try:
        return {"simulate": simulate, "bench": bench, "validate": validate}[cfg.mode](cfg, out)
    except (ValueError, KeyError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
