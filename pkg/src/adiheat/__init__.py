"""Axisymmetric ADI heat solver for pulsed multilayer cylinders."""
from .geometry import DomainSpec, Grid, GridSpec, build_grid
from .materials import MaterialTable, eval_property, half_point_lambda, load_materials
from .parallel import ExecPlan, parallel_for_lines, run_benchmark
from .solver import (ADISolver, HeatProblem, NonConvergedError, SolverConfig, TimeStepFloorError, adi_step,
                     initial_tau, thomas_solve)
from .source import SourceSpec, Waveform, pulse_rect, pulse_transient, source_term

__version__ = "0.1.0"
