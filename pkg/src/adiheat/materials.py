"""Temperature-dependent material tables with piecewise-linear interpolation."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

log = logging.getLogger(__name__)


class TableRangeError(ValueError):
    """Temperature outside a table's domain in strict mode."""


class Property(str, enum.Enum):
    CV = "cv"
    LAMBDA = "lambda"
    CHI = "chi"


class HalfPointRule(str, enum.Enum):
    MEAN_TEMPERATURE = "mean_temperature"  # lambda((Ta + Tb) / 2)
    MEAN_VALUE = "mean_value"  # (lambda(Ta) + lambda(Tb)) / 2


class InterfaceRule(str, enum.Enum):
    LOWER_SIDE = "lower_side"
    HARMONIC = "harmonic"


def _as_table(pairs, what: str, allow_zero: bool) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2) if len(pairs) else np.empty((0, 2))
    if arr.shape[0] == 0:
        return arr
    T, v = arr[:, 0], arr[:, 1]
    if np.any(np.diff(T) <= 0):
        raise ValueError(f"{what}: temperature knots must be strictly increasing")
    if np.any(v < 0) or (not allow_zero and np.any(v == 0)):
        raise ValueError(f"{what}: property values must be {'>= 0' if allow_zero else '> 0'}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MaterialTable:
    name: str
    rho: float
    cv_table: np.ndarray
    lambda_table: np.ndarray
    chi_table: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"{self.name}: rho must be > 0")
        object.__setattr__(self, "cv_table", _as_table(self.cv_table, f"{self.name}.cv", False))
        object.__setattr__(self, "lambda_table", _as_table(self.lambda_table, f"{self.name}.lambda", False))
        object.__setattr__(self, "chi_table", _as_table(self.chi_table, f"{self.name}.chi", True))
        if self.cv_table.shape[0] == 0 or self.lambda_table.shape[0] == 0:
            raise ValueError(f"{self.name}: cv and lambda tables are required")

    def table(self, which: Property | str) -> np.ndarray:
        which = Property(which)
        if which is Property.CV:
            return self.cv_table
        if which is Property.LAMBDA:
            return self.lambda_table
        return self.chi_table

    def domain(self, which: Property | str) -> tuple[float, float]:
        t = self.table(which)
        return float(t[0, 0]), float(t[-1, 0])

    def covers(self, lo: float, hi: float, slack: float = 0.0) -> bool:
        tables = [self.cv_table, self.lambda_table]
        if self.chi_table.shape[0]:
            tables.append(self.chi_table)
        return all(t[0, 0] - slack <= lo and hi <= t[-1, 0] + slack for t in tables)

    def to_dict(self) -> dict:
        out = {
            "rho": self.rho,
            "cv": self.cv_table.tolist(),
            "lambda": self.lambda_table.tolist(),
        }
        if self.chi_table.shape[0]:
            out["chi"] = self.chi_table.tolist()
        return out


def eval_property(table: MaterialTable, which: Property | str, T, strict: bool = False):
    """Interpolate a property at ``T`` (scalar or array).

    Outside the knot range the end values are used and a warning is
    logged; with ``strict=True`` a :class:`TableRangeError` is raised.
    """
    tab = table.table(which)
    if tab.shape[0] == 0:
        raise KeyError(f"material {table.name!r} has no {Property(which).value} table")
    Tarr = np.asarray(T, dtype=float)
    lo, hi = tab[0, 0], tab[-1, 0]
    if Tarr.size and (Tarr.min() < lo or Tarr.max() > hi):
        msg = (f"{table.name}.{Property(which).value}: T in [{Tarr.min():g}, {Tarr.max():g}] "
               f"outside table domain [{lo:g}, {hi:g}]")
        if strict:
            raise TableRangeError(msg)
        log.warning("%s; clamping", msg)
    out = np.interp(Tarr, tab[:, 0], tab[:, 1])
    return float(out) if np.ndim(T) == 0 else out


def half_point_lambda(table: MaterialTable, T_a, T_b, rule: HalfPointRule | str = HalfPointRule.MEAN_TEMPERATURE,
                      strict: bool = False):
    rule = HalfPointRule(rule)
    if rule is HalfPointRule.MEAN_TEMPERATURE:
        return eval_property(table, Property.LAMBDA, 0.5 * (np.asarray(T_a) + np.asarray(T_b)), strict)
    return 0.5 * (eval_property(table, Property.LAMBDA, T_a, strict)
                  + eval_property(table, Property.LAMBDA, T_b, strict))


def interface_lambda(lower: MaterialTable, upper: MaterialTable, T_a, T_b,
                     rule: HalfPointRule | str = HalfPointRule.MEAN_TEMPERATURE,
                     interface: InterfaceRule | str = InterfaceRule.LOWER_SIDE, strict: bool = False):
    """Face conductivity between a cell of ``lower`` (at ``T_a``) and one of ``upper`` (at ``T_b``)."""
    la = half_point_lambda(lower, T_a, T_b, rule, strict)
    if InterfaceRule(interface) is InterfaceRule.LOWER_SIDE or lower is upper:
        return la
    lb = half_point_lambda(upper, T_a, T_b, rule, strict)
    return 2.0 * la * lb / (la + lb)


def load_materials(path: str | Path) -> dict[str, MaterialTable]:
    """Read a YAML material file.

    Schema::

        materials:
          <name>:
            rho: <float>
            cv: [[T, value], ...]
            lambda: [[T, value], ...]
            chi: [[T, value], ...]     # optional
    """
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return parse_materials(data, source=str(path))


def parse_materials(data: dict, source: str = "<materials>") -> dict[str, MaterialTable]:
    if not isinstance(data, dict) or not isinstance(data.get("materials"), dict):
        raise ValueError(f"{source}: expected a top-level 'materials' mapping")
    out = {}
    for name, block in data["materials"].items():
        if not isinstance(block, dict):
            raise ValueError(f"{source}: materials.{name} must be a mapping")
        unknown = set(block) - {"rho", "cv", "lambda", "chi"}
        if unknown:
            raise ValueError(f"{source}: materials.{name}: unknown keys {sorted(unknown)}")
        for key in ("rho", "cv", "lambda"):
            if key not in block:
                raise ValueError(f"{source}: materials.{name}.{key} is missing")
        out[name] = MaterialTable(
            name=name, rho=float(block["rho"]), cv_table=block["cv"],
            lambda_table=block["lambda"], chi_table=block.get("chi") or [],
        )
    return out


def constant_material(name: str, rho: float, cv: float, lam: float, chi: float | None = None,
                      T_lo: float = 0.0, T_hi: float = 1e4) -> MaterialTable:
    chi_table = [] if chi is None else [[T_lo, chi], [T_hi, chi]]
    return MaterialTable(name, rho, [[T_lo, cv], [T_hi, cv]], [[T_lo, lam], [T_hi, lam]], chi_table)


@dataclass(frozen=True, eq=False)
class PackedTables:
    """Per-layer tables padded into rectangular arrays for the kernels."""

    rho: np.ndarray
    knots: dict
    values: dict
    counts: dict

    @classmethod
    def from_layers(cls, layers: list[MaterialTable]) -> "PackedTables":
        knots, values, counts = {}, {}, {}
        for prop in Property:
            tabs = [m.table(prop) for m in layers]
            K = max(1, max(t.shape[0] for t in tabs))
            kn = np.zeros((len(layers), K))
            va = np.zeros((len(layers), K))
            cn = np.zeros(len(layers), dtype=np.int32)
            for m, t in enumerate(tabs):
                n = t.shape[0]
                cn[m] = n
                if n:
                    kn[m, :n] = t[:, 0]
                    va[m, :n] = t[:, 1]
            knots[prop], values[prop], counts[prop] = kn, va, cn
        rho = np.array([m.rho for m in layers], dtype=float)
        return cls(rho=rho, knots=knots, values=values, counts=counts)
