"""Pulsed Joule heating: rectangular and erf-smoothed pulse trains."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .materials import MaterialTable, Property, eval_property

# erf(x) rounds to +-1 in double precision for |x| > ~5.9
_ERF_SATURATION = 6.5


class Waveform(str, enum.Enum):
    RECTANGULAR = "rectangular"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class SourceSpec:
    t_per: float
    t_src: float
    t_trs: float
    xi: float = 4.0
    zeta: float = 2.0
    I0: float = 0.0
    S_C: float = 1.0
    waveform: Waveform = Waveform.TRANSIENT
    joule_dimensional: bool = False

    def __post_init__(self):
        object.__setattr__(self, "waveform", Waveform(self.waveform))
        if not 0 < self.t_src <= self.t_per:
            raise ValueError(f"need 0 < t_src <= t_per, got t_src={self.t_src}, t_per={self.t_per}")
        if not 0 < self.t_trs < self.t_src:
            raise ValueError(f"need 0 < t_trs < t_src, got t_trs={self.t_trs}")
        if not (self.xi > 0 and self.zeta > 0):
            raise ValueError("xi and zeta must be positive")
        if self.I0 < 0:
            raise ValueError("I0 must be >= 0")
        if not self.S_C > 0:
            raise ValueError("S_C must be > 0")

    @property
    def amplitude(self) -> float:
        """Multiplier of chi(T) * p(t) in the source layer."""
        if self.joule_dimensional:
            return self.I0 ** 2 / self.S_C ** 2
        return self.I0 ** 2 / self.S_C

    def phase(self, t: float) -> float:
        """``t mod t_per``; values within rounding of a period end snap to 0."""
        ph = math.fmod(t, self.t_per)
        if self.t_per - ph <= 1e-12 * self.t_per:
            ph = 0.0
        return ph


def pulse_rect(t: float, spec: SourceSpec) -> float:
    """Periodic unit pulse, on for ``t mod t_per`` in ``[0, t_src)``."""
    return 1.0 if spec.phase(t) < spec.t_src else 0.0


def pulse_transient(t: float, spec: SourceSpec) -> float:
    """Sum of erf turn-on/turn-off pairs over the pulses that matter at ``t``.

    A pulse contributes only while ``t`` is within a few ``t_trs`` of one
    of its edges, or between its edges; far-away terms cancel exactly.
    """
    xi, zeta, trs = spec.xi, spec.zeta, spec.t_trs
    # erf argument xi*(zeta*x - 1) leaves saturation for x in (x_lo, x_hi), x in units of t_trs
    x_hi = (1.0 + _ERF_SATURATION / xi) / zeta
    x_lo = (1.0 - _ERF_SATURATION / xi) / zeta
    n_lo = max(0, math.floor((t - spec.t_src - x_hi * trs) / spec.t_per))
    n_hi = math.floor((t - x_lo * trs) / spec.t_per)
    total = 0.0
    for n in range(n_lo, n_hi + 1):
        start = n * spec.t_per
        on = math.erf(xi * (zeta * (t - start) / trs - 1.0))
        off = math.erf(xi * (zeta * (t - start - spec.t_src) / trs - 1.0))
        total += on - off
    return 0.5 * total


def pulse(t: float, spec: SourceSpec) -> float:
    if spec.waveform is Waveform.RECTANGULAR:
        return pulse_rect(t, spec)
    return pulse_transient(t, spec)


def source_term(T, t: float, layer: int, source_layer: int, chi_table: MaterialTable | None,
                spec: SourceSpec, strict: bool = False):
    """Joule power density ``chi(T) * I0^2 / S_C * p(t)`` in the source layer, 0 elsewhere."""
    if layer != source_layer:
        return np.zeros_like(T, dtype=float) if np.ndim(T) else 0.0
    if chi_table is None or chi_table.chi_table.shape[0] == 0:
        raise KeyError("source layer has no chi table")
    return eval_property(chi_table, Property.CHI, T, strict) * spec.amplitude * pulse(t, spec)


def in_transition(t: float, spec: SourceSpec) -> bool:
    ph = spec.phase(t)
    tol = 1e-12 * spec.t_per
    return ph <= spec.t_trs or spec.t_src - tol <= ph <= spec.t_src + spec.t_trs or ph >= spec.t_per - tol


def next_edge(t: float, spec: SourceSpec) -> float:
    """Distance from ``t`` to the next turn-on or turn-off instant."""
    ph = spec.phase(t)
    if ph < spec.t_src:
        return spec.t_src - ph
    return spec.t_per - ph
