"""Time evolution: step the solver until ``t_end`` or until the field settles into its periodic regime."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import Grid, nearest_cell
from .parallel import ExecPlan
from .solver import ADISolver, HeatProblem, TimeStepFloorError

log = logging.getLogger(__name__)

SNAPSHOT_PHASES = ("before_on", "after_off")


@dataclass(frozen=True)
class RegimeDetectorConfig:
    samples_per_period: int = 64
    tolerance: float = 1e-3
    min_periods: int = 2

    def __post_init__(self):
        if self.samples_per_period < 1 or self.min_periods < 1 or not self.tolerance > 0:
            raise ValueError("detector settings must all be positive")


class ExactSum:
    """Running float sum without rounding drift (Shewchuk partials, as in ``math.fsum``)."""

    def __init__(self, start: float = 0.0):
        self._partials: list[float] = []
        self.add(start)

    def add(self, x: float) -> float:
        partials = []
        for y in self._partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials.append(lo)
            x = hi
        partials.append(x)
        self._partials = partials
        return self.value

    @property
    def value(self) -> float:
        return math.fsum(self._partials)


@dataclass
class EvolutionState:
    t: float
    step_count: int
    field: np.ndarray
    probe_trace: list = field(default_factory=list)  # (t, values) per accepted step
    period_buffer: list = field(default_factory=list)  # (samples, n_probes) per completed period


@dataclass
class EvolutionResult:
    state: EvolutionState
    stop_reason: str  # "time" or "periodic"
    probes: list[tuple[int, int]]
    snapshots: dict = field(default_factory=dict)  # phase -> (t, field), latest occurrence
    taus: list = field(default_factory=list)

    @property
    def trace_times(self) -> np.ndarray:
        return np.array([t for t, _ in self.state.probe_trace])

    @property
    def trace_values(self) -> np.ndarray:
        n = len(self.probes)
        return np.array([v for _, v in self.state.probe_trace]).reshape(-1, n)

    def resampled(self) -> np.ndarray:
        """Detector input, shape ``(n_periods, samples_per_period, n_probes)``."""
        if not self.state.period_buffer:
            return np.empty((0, 0, len(self.probes)))
        return np.stack(self.state.period_buffer)


class EvolutionAborted(TimeStepFloorError):
    """The step size collapsed; ``state`` holds the last accepted state."""

    def __init__(self, msg: str, state: EvolutionState):
        super().__init__(msg)
        self.state = state


def probe(field: np.ndarray, grid: Grid, location: tuple[float, float]) -> float:
    """Temperature at the cell centre nearest to ``(r, z)``."""
    i, j = nearest_cell(grid, *location)
    return float(field[j, i])


def detect_periodic(buffer: Sequence[np.ndarray], cfg: RegimeDetectorConfig) -> bool:
    """True when each of the last ``min_periods`` period pairs differs by less than ``tolerance``.

    ``buffer`` holds one array of phase samples per completed period.
    """
    if len(buffer) < cfg.min_periods + 1:
        return False
    recent = [np.asarray(b, dtype=float) for b in buffer[-(cfg.min_periods + 1):]]
    for prev, cur in zip(recent[:-1], recent[1:]):
        diff = np.abs(cur - prev)
        if diff.size and not np.nanmax(diff) < cfg.tolerance:
            return False
        if np.isnan(diff).any():
            return False
    return True


def resample_period(times: np.ndarray, values: np.ndarray, t_start: float, t_per: float,
                    samples: int) -> np.ndarray:
    """Linear interpolation of a trace onto ``samples`` equally spaced phases of one period."""
    at = t_start + t_per * np.arange(samples) / samples
    return np.column_stack([np.interp(at, times, values[:, p]) for p in range(values.shape[1])])


def _next_instant(t: float, t_per: float, offsets: Sequence[float], eps: float) -> float:
    """Smallest time ``n * t_per + offset`` strictly after ``t`` (beyond ``eps``)."""
    n = math.floor(t / t_per)
    best = math.inf
    for k in (n - 1, n, n + 1):
        for off in offsets:
            c = k * t_per + off
            if c > t + eps:
                best = min(best, c)
    return best


def evolve(problem: HeatProblem, t_end: float, initial: np.ndarray | None = None, *,
           probes: Sequence[tuple[float, float]] | None = None,
           detector: RegimeDetectorConfig | None = RegimeDetectorConfig(),
           plan: ExecPlan | None = None, backend: str | None = None, t_start: float = 0.0,
           snapshot_phases: Sequence[str] = SNAPSHOT_PHASES,
           on_snapshot: Callable[[str, float, np.ndarray], None] | None = None,
           max_steps: int | None = None, solver: ADISolver | None = None) -> EvolutionResult:
    """Advance from ``t_start`` to ``t_end`` or until the periodic regime is detected.

    Steps are shortened so that they end exactly on source edges, period
    boundaries and snapshot instants.  Snapshot phase ``"before_on"`` is the end of
    a period (just before the source turns on), ``"after_off"`` is ``t_src +
    t_trs`` into the period (the source has just turned off).  The default
    probe sits on the outer surface at ``z = 0``.
    """
    if not t_end > t_start:
        raise ValueError(f"t_end must exceed the start time, got {t_end}")
    src, grid = problem.source, problem.grid
    solver = solver or ADISolver(problem, plan, backend)
    for p in snapshot_phases:
        if p not in SNAPSHOT_PHASES:
            raise ValueError(f"unknown snapshot phase {p!r}")
    probe_cells = [nearest_cell(grid, r, z) for r, z in (probes or [(grid.domain.r_max, 0.0)])]
    pi = np.array([i for i, _ in probe_cells])
    pj = np.array([j for _, j in probe_cells])

    T = problem.initial_field() if initial is None else np.array(initial, dtype=float)
    if T.shape != grid.shape:
        raise ValueError(f"initial field has shape {T.shape}, expected {grid.shape}")
    state = EvolutionState(t=float(t_start), step_count=0, field=T)
    result = EvolutionResult(state=state, stop_reason="time", probes=probe_cells)

    eps = 1e-12 * src.t_per
    edges = [0.0, src.t_src]
    snap_off = {"before_on": 0.0, "after_off": src.t_src + src.t_trs}
    offsets = edges + [snap_off[p] for p in snapshot_phases]
    clock = ExactSum(t_start)
    t_now = state.t

    # trace used for resampling includes the starting point
    times = [state.t]
    values = [T[pj, pi].copy()]
    n_period = math.ceil(t_start / src.t_per - 1e-9)
    spp = detector.samples_per_period if detector else 64

    while t_now < t_end - eps:
        if max_steps is not None and state.step_count >= max_steps:
            break
        target = min(_next_instant(t_now, src.t_per, offsets, eps), t_end)
        try:
            T, tau = solver.step(state.field, t_now, tau_max=target - t_now)
        except TimeStepFloorError as exc:
            raise EvolutionAborted(str(exc), state) from exc
        t_new = clock.add(tau)
        if abs(t_new - target) <= eps:
            # land on the instant exactly; the accumulated sum keeps the true total
            t_now = target
        else:
            t_now = t_new
        state.t, state.field = t_new, T
        state.step_count += 1
        result.taus.append(tau)
        vals = T[pj, pi].copy()
        state.probe_trace.append((t_new, tuple(vals.tolist())))
        times.append(t_new)
        values.append(vals)

        ph = t_now - math.floor(t_now / src.t_per + 1e-9) * src.t_per
        for p in snapshot_phases:
            if abs(ph - snap_off[p]) <= eps or (p == "before_on" and abs(ph - src.t_per) <= eps):
                result.snapshots[p] = (t_new, T.copy())
                if on_snapshot is not None:
                    on_snapshot(p, t_new, T)

        period_end = (n_period + 1) * src.t_per
        if t_new >= period_end - eps:
            tt, vv = np.asarray(times), np.asarray(values)
            while t_new >= (n_period + 1) * src.t_per - eps:
                start = n_period * src.t_per
                state.period_buffer.append(resample_period(tt, vv, start, src.t_per, spp))
                n_period += 1
            # drop trace points that no later period needs
            keep = max(0, int(np.searchsorted(tt, n_period * src.t_per)) - 1)
            del times[:keep], values[:keep]
            if detector is not None and detect_periodic(state.period_buffer, detector):
                result.stop_reason = "periodic"
                log.info("periodic regime after %d periods (t=%.6g)", len(state.period_buffer), t_new)
                break
    return result
