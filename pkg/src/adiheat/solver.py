"""ADI time stepping for the axisymmetric quasilinear heat equation.

One step advances the field by ``tau`` in two half-steps: implicit in r
with the axial operator explicit, then implicit in z with the radial
operator explicit.  Each half-step is nonlinear (capacity, conductivity
and resistivity depend on T) and is solved by simple iteration, freezing
the coefficients at the previous iterate so that every iteration is a set
of independent tridiagonal line solves.  A half-step that needs more than
``max_iter`` iterations makes the step restart with ``tau / 2``.

Fields are ``(nz, nr)`` arrays; cells outside the stepped domain hold T0
and are never updated.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .geometry import Grid, cell_metrics, layer_index
from .materials import (HalfPointRule, InterfaceRule, MaterialTable, PackedTables, Property, TableRangeError,
                        eval_property, interface_lambda)
from .parallel import ExecPlan, ordered_max
from .source import SourceSpec, in_transition, pulse

log = logging.getLogger(__name__)


class NonConvergedError(RuntimeError):
    def __init__(self, direction: str, iterations: int, residual: float):
        super().__init__(f"{direction} half-step: no convergence after {iterations} iterations "
                         f"(last update {residual:.3e})")
        self.direction = direction
        self.iterations = iterations
        self.residual = residual


class TimeStepFloorError(RuntimeError):
    """``tau`` was halved below ``tau_min``."""


class ZeroPivotError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-6
    max_iter: int = 10
    tau_min: float | None = None
    tau_transient_divisor: float = 1000.0
    tau_source_divisor: float = 100.0
    halfpoint_rule: HalfPointRule = HalfPointRule.MEAN_TEMPERATURE
    interface_rule: InterfaceRule = InterfaceRule.LOWER_SIDE
    strict_range: bool = False
    T0: float = 4.2
    T_ceiling: float = 300.0
    terminal_dirichlet: bool = True

    def __post_init__(self):
        object.__setattr__(self, "halfpoint_rule", HalfPointRule(self.halfpoint_rule))
        object.__setattr__(self, "interface_rule", InterfaceRule(self.interface_rule))
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tau_min is not None and not self.tau_min > 0:
            raise ValueError("tau_min must be > 0")
        if not (self.tau_transient_divisor > 0 and self.tau_source_divisor > 0):
            raise ValueError("tau divisors must be > 0")

    def resolved_tau_min(self, source: SourceSpec) -> float:
        return self.tau_min if self.tau_min is not None else 1e-12 * source.t_per


@dataclass(eq=False)
class HeatProblem:
    """Everything that defines a run: grid, per-layer materials, source, solver settings.

    ``extra_source(t)``, if given, returns an ``(nz, nr)`` array of power
    density added to the Joule term; it does not depend on T.
    """

    grid: Grid
    layers: list[MaterialTable]
    source: SourceSpec
    config: SolverConfig = field(default_factory=SolverConfig)
    extra_source: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        if len(self.layers) != self.grid.domain.n_layers:
            raise ValueError(f"{len(self.layers)} material tables for {self.grid.domain.n_layers} layers")
        src = self.layers[self.grid.domain.source_layer]
        if self.source.I0 > 0 and src.chi_table.shape[0] == 0:
            raise KeyError(f"source layer material {src.name!r} has no chi table")
        lo, hi = self.config.T0, self.config.T_ceiling
        for m in self.layers:
            if not m.covers(lo, hi):
                msg = f"material {m.name!r} tables do not cover [{lo}, {hi}]"
                if self.config.strict_range:
                    raise TableRangeError(msg)
                log.warning(msg)

    @property
    def source_layer(self) -> int:
        return self.grid.domain.source_layer

    def initial_field(self) -> np.ndarray:
        return np.full(self.grid.shape, float(self.config.T0))


def initial_tau(t: float, source: SourceSpec, cfg: SolverConfig) -> float:
    """Step estimate: short inside the turn-on/turn-off transients, long elsewhere."""
    if in_transition(t, source):
        return source.t_trs / cfg.tau_transient_divisor
    return source.t_src / cfg.tau_source_divisor


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve one tridiagonal system.

    ``lower`` and ``upper`` hold the n-1 off-diagonal entries (``lower[k]``
    is row k+1, column k).
    """
    b = np.asarray(diag, dtype=float)
    n = b.size
    a = np.asarray(lower, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.asarray(rhs, dtype=float)
    if n < 1 or a.size != n - 1 or c.size != n - 1 or d.size != n:
        raise ValueError("inconsistent tridiagonal system sizes")
    cp = np.empty(n)
    dp = np.empty(n)
    den = b[0]
    if den == 0.0:
        raise ZeroPivotError("zero pivot in row 0")
    cp[0] = c[0] / den if n > 1 else 0.0
    dp[0] = d[0] / den
    for k in range(1, n):
        den = b[k] - a[k - 1] * cp[k - 1]
        if den == 0.0:
            raise ZeroPivotError(f"zero pivot in row {k}")
        cp[k] = c[k] / den if k < n - 1 else 0.0
        dp[k] = (d[k] - a[k - 1] * dp[k - 1]) / den
    x = dp
    for k in range(n - 2, -1, -1):
        x[k] -= cp[k] * x[k + 1]
    return x


@dataclass
class StepStats:
    steps: int = 0
    halvings: int = 0
    radial_iterations: int = 0
    axial_iterations: int = 0
    range_warnings: int = 0


@dataclass(frozen=True, eq=False)
class _Lines:
    """Metric and topology arrays for sweeping one direction."""

    layer: np.ndarray
    length: np.ndarray
    wc: np.ndarray
    bar: np.ndarray
    wf: np.ndarray
    d: np.ndarray
    dirichlet: np.ndarray


class ADISolver:
    def __init__(self, problem: HeatProblem, plan: ExecPlan | None = None, backend: str | None = None):
        self.problem = problem
        self.plan = plan or ExecPlan()
        self.backend = kernels.get_backend(backend)
        self.stats = StepStats()
        g, cfg = problem.grid, problem.config
        self._tables = PackedTables.from_layers(problem.layers)
        self._rule = 0 if cfg.halfpoint_rule is HalfPointRule.MEAN_TEMPERATURE else 1
        self._iface = 0 if cfg.interface_rule is InterfaceRule.LOWER_SIDE else 1
        c = np.ascontiguousarray
        self._radial = _Lines(
            layer=c(g.layer_of, dtype=np.int32), length=c(g.row_length, dtype=np.int32),
            wc=c(g.r_centers), bar=c(g.hbar), wf=c(g.r_half), d=c(g.dr),
            dirichlet=np.zeros(g.nz, dtype=np.uint8),
        )
        dirichlet = np.zeros(g.nr, dtype=np.uint8)
        if cfg.terminal_dirichlet:
            dirichlet[: g.nr_core] = 1
        self._axial = _Lines(
            layer=c(g.layer_of.T, dtype=np.int32), length=c(g.col_length, dtype=np.int32),
            wc=np.ones(g.nz), bar=c(g.etabar), wf=np.ones(g.nz + 1), d=c(g.dz),
            dirichlet=dirichlet,
        )
        lo = max(max(m.domain(p)[0] for p in (Property.CV, Property.LAMBDA)) for m in problem.layers)
        hi = min(min(m.domain(p)[1] for p in (Property.CV, Property.LAMBDA)) for m in problem.layers)
        # rounding may push T a few ulp past a knot placed exactly at T0
        self._slack = 1e-9 * max(1.0, abs(hi))
        self._safe_range = (lo - self._slack, hi + self._slack)
        flat = g.layer_of.ravel()
        self._cells = [np.flatnonzero(flat == m) for m in range(len(problem.layers))]
        self._rho_field = np.append(self._tables.rho, 0.0)[g.layer_of]

    # -- coefficient fields -------------------------------------------------

    def _by_layer(self, T: np.ndarray, which: Property) -> np.ndarray:
        out = np.zeros(T.size)
        flat = np.ascontiguousarray(T).ravel()
        for m, mat in enumerate(self.problem.layers):
            if which is Property.CHI and mat.chi_table.shape[0] == 0:
                continue
            idx = self._cells[m]
            tab = mat.table(which)
            out[idx] = np.interp(flat[idx], tab[:, 0], tab[:, 1])
        return out.reshape(T.shape)

    def capacity(self, T: np.ndarray) -> np.ndarray:
        """``rho * c_V(T)`` per cell (zero outside the domain)."""
        return self._rho_field * self._by_layer(T, Property.CV)

    def source_amplitudes(self, t: float) -> np.ndarray:
        amp = np.zeros(len(self.problem.layers))
        src = self.problem.source
        if src.I0 > 0:
            amp[self.problem.source_layer] = src.amplitude * pulse(t, src)
        return amp

    def joule(self, T: np.ndarray, t: float) -> np.ndarray:
        amp = self.source_amplitudes(t)
        m = self.problem.source_layer
        if amp[m] == 0.0:
            return np.zeros_like(T)
        mat = self.problem.layers[m]
        idx = self._cells[m]
        out = np.zeros(T.size)
        out[idx] = amp[m] * np.interp(np.ascontiguousarray(T).ravel()[idx], mat.chi_table[:, 0], mat.chi_table[:, 1])
        return out.reshape(T.shape)

    def _extra(self, t: float):
        f = self.problem.extra_source
        if f is None:
            return 0.0
        return np.where(self.problem.grid.mask, f(t), 0.0)

    # -- operators ------------------------------------------------------------

    def _apply(self, T_lines: np.ndarray, lines: _Lines) -> np.ndarray:
        tb = self._tables
        out = np.zeros_like(T_lines)
        self.backend.apply_operator(
            T_lines, lines.layer, lines.length, lines.wc, lines.bar, lines.wf, lines.d, lines.dirichlet,
            float(self.problem.config.T0), tb.knots[Property.LAMBDA], tb.values[Property.LAMBDA],
            tb.counts[Property.LAMBDA], self._rule, self._iface, out, self.plan.workers, self.plan.interleave)
        return out

    def lambda_r(self, T: np.ndarray) -> np.ndarray:
        """Radial flux operator applied to the whole field."""
        return self._apply(np.ascontiguousarray(T, dtype=float), self._radial)

    def lambda_z(self, T: np.ndarray) -> np.ndarray:
        """Axial flux operator (with the terminal closure) applied to the whole field."""
        return np.ascontiguousarray(self._apply(np.ascontiguousarray(T.T, dtype=float), self._axial).T)

    # -- half-steps -----------------------------------------------------------

    def _check_range(self, T: np.ndarray) -> None:
        lo, hi = self._safe_range
        tmin, tmax = float(T.min()), float(T.max())
        if lo <= tmin and tmax <= hi:
            return
        flat = np.ascontiguousarray(T).ravel()
        for m, mat in enumerate(self.problem.layers):
            vals = flat[self._cells[m]]
            if vals.size and not mat.covers(float(vals.min()), float(vals.max()), self._slack):
                msg = (f"T in [{vals.min():g}, {vals.max():g}] leaves the tables of {mat.name!r} "
                       f"(layer {m}); values are clamped")
                if self.problem.config.strict_range:
                    raise TableRangeError(msg)
                self.stats.range_warnings += 1
                if self.stats.range_warnings <= 10:
                    log.warning(msg)

    def _iterate(self, direction: str, T_base: np.ndarray, explicit: np.ndarray, cap_fixed, frozen: bool,
                 tau: float, amp: np.ndarray, lines: _Lines) -> tuple[np.ndarray, int]:
        cfg = self.problem.config
        tb = self._tables
        T_iter = T_base
        nl = T_base.shape[0]
        line_max = np.empty(nl)
        status = np.zeros(nl, dtype=np.int32)
        cap_arg = cap_fixed if frozen else T_base
        residual = math.inf
        for s in range(1, int(cfg.max_iter) + 1):
            if not frozen:
                self._check_range(T_iter)
            out = np.empty_like(T_base)
            self.backend.sweep_iteration(
                T_iter, T_base, explicit, cap_arg, frozen, 0.5 * tau,
                lines.layer, lines.length, lines.wc, lines.bar, lines.wf, lines.d, lines.dirichlet,
                float(cfg.T0), tb.rho,
                tb.knots[Property.CV], tb.values[Property.CV], tb.counts[Property.CV],
                tb.knots[Property.LAMBDA], tb.values[Property.LAMBDA], tb.counts[Property.LAMBDA],
                tb.knots[Property.CHI], tb.values[Property.CHI], tb.counts[Property.CHI],
                amp, self._rule, self._iface, out, line_max, status,
                self.plan.workers, self.plan.interleave)
            if status.any():
                bad = int(np.flatnonzero(status)[0])
                raise ZeroPivotError(f"{direction} sweep: zero pivot on line {bad}")
            residual = ordered_max(line_max)
            T_iter = out
            if residual < cfg.epsilon:
                return T_iter, s
        raise NonConvergedError(direction, int(cfg.max_iter), residual)

    def radial_half_step(self, T: np.ndarray, t: float, tau: float) -> tuple[np.ndarray, int]:
        """Solve for the half-layer field; returns it and the iteration count."""
        t_mid = t + 0.5 * tau
        T = np.ascontiguousarray(T, dtype=float)
        explicit = self.lambda_z(T) + self._extra(t_mid)
        amp = self.source_amplitudes(t_mid)
        T_half, its = self._iterate("radial", T, np.ascontiguousarray(explicit), None, False, tau, amp,
                                    self._radial)
        self.stats.radial_iterations += its
        return T_half, its

    def axial_half_step(self, T_half: np.ndarray, t: float, tau: float) -> tuple[np.ndarray, int]:
        t_mid = t + 0.5 * tau
        T_half = np.ascontiguousarray(T_half, dtype=float)
        self._check_range(T_half)
        cap = self.capacity(T_half)
        explicit = self.lambda_r(T_half) + self.joule(T_half, t_mid) + self._extra(t_mid)
        amp = np.zeros(len(self.problem.layers))
        c = np.ascontiguousarray
        T_next, its = self._iterate("axial", c(T_half.T), c(explicit.T), c(cap.T), True, tau, amp,
                                    self._axial)
        self.stats.axial_iterations += its
        return np.ascontiguousarray(T_next.T), its

    def step(self, T: np.ndarray, t: float, tau_max: float | None = None) -> tuple[np.ndarray, float]:
        """Advance one accepted step; returns the new field and the step used."""
        cfg, src = self.problem.config, self.problem.source
        tau = initial_tau(t, src, cfg)
        if tau_max is not None:
            tau = min(tau, tau_max)
        tau_min = cfg.resolved_tau_min(src)
        while True:
            try:
                T_half, _ = self.radial_half_step(T, t, tau)
                T_next, _ = self.axial_half_step(T_half, t, tau)
            except NonConvergedError as exc:
                tau *= 0.5
                self.stats.halvings += 1
                log.debug("t=%.9g: %s; retrying with tau=%.3e", t, exc, tau)
                if tau < tau_min:
                    raise TimeStepFloorError(
                        f"t={t:.9g}: tau={tau:.3e} fell below tau_min={tau_min:.3e}") from exc
                continue
            self.stats.steps += 1
            return T_next, tau


def adi_step(problem: HeatProblem, T: np.ndarray, t: float, plan: ExecPlan | None = None,
             backend: str | None = None) -> tuple[np.ndarray, float]:
    return ADISolver(problem, plan, backend).step(T, t)


def heat_content(problem: HeatProblem, T: np.ndarray) -> float:
    """``sum r_i hbar_i etabar_j rho c_V(T) T`` over the domain (left-to-right summation)."""
    w = problem.grid.volume_weights()
    cap = ADISolver(problem, backend="python").capacity(T)
    return math.fsum((w * cap * T)[problem.grid.mask].tolist())


# -- cell-by-cell reference operators ----------------------------------------

def _face_lambda(problem: HeatProblem, i_a: int, i_b: int, T_a: float, T_b: float) -> float:
    cfg = problem.config
    ma = problem.layers[int(problem.grid.layer_of_col[i_a])]
    mb = problem.layers[int(problem.grid.layer_of_col[i_b])]
    return float(interface_lambda(ma, mb, T_a, T_b, cfg.halfpoint_rule, cfg.interface_rule))


def apply_lambda_r(problem: HeatProblem, T: np.ndarray, i: int, j: int) -> float:
    """Radial operator at one cell, evaluated straight from its definition."""
    g = problem.grid
    r_i, hbar, _, r_lo, r_hi = cell_metrics(g, i, j)
    n = int(g.row_length[j])
    flux_hi = flux_lo = 0.0
    if i + 1 < n:
        flux_hi = r_hi * _face_lambda(problem, i, i + 1, T[j, i], T[j, i + 1]) * (T[j, i + 1] - T[j, i]) / g.dr[i + 1]
    if i > 0:
        flux_lo = r_lo * _face_lambda(problem, i - 1, i, T[j, i - 1], T[j, i]) * (T[j, i] - T[j, i - 1]) / g.dr[i]
    return (flux_hi - flux_lo) / (r_i * hbar)


def apply_lambda_z(problem: HeatProblem, T: np.ndarray, i: int, j: int) -> float:
    g, cfg = problem.grid, problem.config
    _, _, etabar, _, _ = cell_metrics(g, i, j)
    mat = problem.layers[layer_index(g, i, j)]
    n = int(g.col_length[i])

    def lam(Ta, Tb):
        return float(interface_lambda(mat, mat, Ta, Tb, cfg.halfpoint_rule, cfg.interface_rule))

    flux_hi = flux_lo = 0.0
    if j + 1 < n:
        flux_hi = lam(T[j, i], T[j + 1, i]) * (T[j + 1, i] - T[j, i]) / g.dz[j + 1]
    elif cfg.terminal_dirichlet and i < g.nr_core:
        # ghost value mirrors T about the face value T0
        T_ghost = 2.0 * cfg.T0 - T[j, i]
        lam_face = float(eval_property(mat, Property.LAMBDA, cfg.T0))
        flux_hi = lam_face * (T_ghost - T[j, i]) / g.dz[j + 1]
    if j > 0:
        flux_lo = lam(T[j - 1, i], T[j, i]) * (T[j, i] - T[j - 1, i]) / g.dz[j]
    return (flux_hi - flux_lo) / etabar
