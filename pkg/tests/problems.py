"""Small problems shared by the unit and acceptance tests."""
import numpy as np

from adiheat.geometry import DomainSpec, GridSpec, build_grid
from adiheat.materials import MaterialTable, constant_material
from adiheat.solver import HeatProblem, SolverConfig
from adiheat.source import SourceSpec

KNOTS = np.array([0.0, 10.0, 20.0, 40.0, 80.0])


def nonlinear_material() -> MaterialTable:
    """lambda = 1 + 0.1 T and chi = 0.5 + 0.01 T, exact at the knots and linear between them."""
    return MaterialTable("m", 1.0, np.column_stack([KNOTS, np.ones_like(KNOTS)]),
                         np.column_stack([KNOTS, 1.0 + 0.1 * KNOTS]),
                         np.column_stack([KNOTS, 0.5 + 0.01 * KNOTS]))


def cylinder(nr, nz, R=1.0, L=1.0):
    return build_grid(DomainSpec((R,), L, L, ("m",), 0), GridSpec((nr,), nz, nz))


def nonlinear_problem(nr=6, nz=4, I0=2.0, **cfg) -> HeatProblem:
    # t_per = 1, pulse on for 0.9: the source amplitude is I0^2 = 4 over the test window
    source = SourceSpec(1.0, 0.9, 0.01, I0=I0, S_C=1.0, waveform="rectangular")
    return HeatProblem(cylinder(nr, nz), [nonlinear_material()], source,
                       SolverConfig(T_ceiling=80.0, **cfg))


def bump(grid, base=4.2, amplitude=20.0):
    rr, zz = np.meshgrid(grid.r_centers, grid.z_centers)
    return base + amplitude * np.cos(np.pi * rr / 2) * np.cos(np.pi * zz / 2)


def linear_problem(nr=6, nz=4, lam=1.0, cap=1.0, **cfg) -> HeatProblem:
    source = SourceSpec(1.0, 0.9, 0.01)
    return HeatProblem(cylinder(nr, nz), [constant_material("m", 1.0, cap, lam)], source,
                       SolverConfig(T_ceiling=80.0, **cfg))
