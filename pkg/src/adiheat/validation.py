"""Quick self-checks run by ``adiheat --mode validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DomainSpec, GridSpec, build_grid
from .materials import constant_material
from .solver import ADISolver, HeatProblem, SolverConfig, heat_content, thomas_solve
from .source import SourceSpec, Waveform, pulse_rect, pulse_transient


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} (limit {self.limit:.0e})"


def random_tridiagonal(rng: np.random.Generator, n: int):
    """Strictly diagonally dominant system (lower, diag, upper, rhs)."""
    lower = rng.uniform(-1, 1, n - 1)
    upper = rng.uniform(-1, 1, n - 1)
    off = np.zeros(n)
    off[1:] += np.abs(lower)
    off[:-1] += np.abs(upper)
    diag = (off + rng.uniform(0.5, 2.0, n)) * rng.choice([-1.0, 1.0], n)
    return lower, diag, upper, rng.uniform(-1, 1, n)


def check_thomas(systems: int = 1000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(systems):
        n = int(rng.integers(2, 65))
        lower, diag, upper, rhs = random_tridiagonal(rng, n)
        dense = np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)
        ref = np.linalg.solve(dense, rhs)
        x = thomas_solve(lower, diag, upper, rhs)
        worst = max(worst, float(np.max(np.abs(x - ref)) / np.max(np.abs(ref))))
    return CheckResult("thomas vs dense solve", worst <= 1e-12, worst, 1e-12)


def conservation_problem(nr_per_layer=(40, 10, 10, 4), nz=(32, 26)) -> HeatProblem:
    """Four constant-property layers, no source and no heat leaving the domain."""
    domain = DomainSpec((0.24, 0.245, 0.25, 0.2501), 5.0, 4.0, ("a", "b", "c", "d"), 2)
    grid = build_grid(domain, GridSpec(nr_per_layer, nz[0], nz[1]))
    layers = [constant_material("a", 8.9, 0.2, 50.0), constant_material("b", 1.4, 0.5, 0.05),
              constant_material("c", 2.0, 0.3, 1.0, chi=1.0), constant_material("d", 2.0, 0.4, 0.2)]
    source = SourceSpec(0.1, 0.01, 1e-4, I0=0.0)
    return HeatProblem(grid, layers, source, SolverConfig(terminal_dirichlet=False))


def smooth_field(grid, amplitude: float = 20.0, base: float = 4.2) -> np.ndarray:
    rr, zz = np.meshgrid(grid.r_centers / grid.domain.r_max, grid.z_centers / grid.domain.core_length)
    return np.where(grid.mask, base + amplitude * (0.5 + 0.5 * np.cos(np.pi * zz)) * (1.0 + rr ** 2) / 2, base)


def check_conservation(steps: int = 100, backend: str | None = None) -> CheckResult:
    prob = conservation_problem()
    T = smooth_field(prob.grid)
    solver = ADISolver(prob, backend=backend)
    q0 = heat_content(prob, T)
    t = 0.0
    for _ in range(steps):
        T, tau = solver.step(T, t)
        t += tau
    drift = abs(heat_content(prob, T) - q0) / abs(q0)
    return CheckResult("heat content drift", drift <= 1e-10, drift, 1e-10)


def check_pulse_limits() -> list[CheckResult]:
    spec = SourceSpec(0.1, 0.01, 1e-4, xi=4.0, zeta=2.0, waveform=Waveform.TRANSIENT)
    worst = 0.0
    for t in np.linspace(0.0, 3 * spec.t_per, 30001):
        ph = spec.phase(t)
        if ph <= spec.t_trs or spec.t_src <= ph <= spec.t_src + spec.t_trs:
            continue
        worst = max(worst, abs(pulse_transient(t, spec) - pulse_rect(t, spec)))
    # sample times on multiples of 2^-54 so that t + 3 t_per is exact
    shift = 3 * spec.t_per
    period = 0.0
    for t in np.round(np.linspace(0.0, spec.t_per, 2001) * 2.0 ** 54) / 2.0 ** 54:
        period = max(period, abs(pulse_transient(t + shift, spec) - pulse_transient(t, spec)))
    return [CheckResult("pulse vs rectangle off the edges", worst < 1e-6, worst, 1e-6),
            CheckResult("pulse periodicity over 3 periods", period <= 1e-12, period, 1e-12)]


def run_all(backend: str | None = None) -> list[CheckResult]:
    return [check_thomas(), check_conservation(backend=backend), *check_pulse_limits()]


def all_passed(results) -> bool:
    return all(r.passed and math.isfinite(r.value) for r in results)
