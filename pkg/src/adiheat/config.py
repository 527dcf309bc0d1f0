"""Run configuration: YAML schema, validation and the resolved-config dump.

A config file has the sections ``domain``, ``grid``, ``materials_file``,
``source``, ``solver``, ``runner``, ``exec``, ``bench`` plus the scalars
``output_dir`` and ``mode``.  Unknown keys are errors.  Every parse error
names the offending field path and, when known, its line in the file.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .geometry import DomainSpec, GridSpec, build_grid
from .materials import load_materials
from .parallel import CHUNKING, ExecPlan
from .runner import SNAPSHOT_PHASES, RegimeDetectorConfig
from .solver import HeatProblem, SolverConfig
from .source import SourceSpec, Waveform

MODES = ("simulate", "bench", "validate")
SNAPSHOT_FORMATS = ("csv", "vtk")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None, source: str | None = None):
        where = f"{source}:{line}: " if source and line else (f"{source}: " if source else "")
        super().__init__(f"{where}{path}: {message}" if path else f"{where}{message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class RunnerConfig:
    t_end: float = 1.0
    probes: tuple[tuple[float, float], ...] | None = None
    snapshot_phases: tuple[str, ...] = SNAPSHOT_PHASES
    snapshot_formats: tuple[str, ...] = ("csv",)
    detector: RegimeDetectorConfig | None = RegimeDetectorConfig()
    band: tuple[float, float] | None = None


@dataclass(frozen=True)
class ExecConfig:
    workers: int = 1
    chunking: str = "static-block"
    backend: str | None = None

    def plan(self) -> ExecPlan:
        return ExecPlan(workers=self.workers, chunking=self.chunking)


@dataclass(frozen=True)
class BenchConfig:
    workers: tuple[int, ...] = (1, 2, 4)
    steps: int = 20
    repeats: int = 1


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    grid: GridSpec
    materials_file: Path
    source: SourceSpec
    solver: SolverConfig = SolverConfig()
    runner: RunnerConfig = RunnerConfig()
    exec: ExecConfig = ExecConfig()
    bench: BenchConfig = BenchConfig()
    output_dir: str | None = None
    mode: str = "simulate"

    def build_problem(self) -> HeatProblem:
        mats = load_materials(self.materials_file)
        missing = [n for n in self.domain.layer_materials if n not in mats]
        if missing:
            raise ConfigError("domain.layer_materials", f"materials {missing} not in {self.materials_file}")
        layers = [mats[n] for n in self.domain.layer_materials]
        return HeatProblem(build_grid(self.domain, self.grid), layers, self.source, self.solver)

    def to_dict(self) -> dict:
        """Plain-data form with every default filled in (the resolved config)."""
        def plain(v):
            if dataclasses.is_dataclass(v):
                return {f.name: plain(getattr(v, f.name)) for f in dataclasses.fields(v)}
            if isinstance(v, (tuple, list)):
                return [plain(x) for x in v]
            if isinstance(v, Path):
                return str(v)
            if hasattr(v, "value") and isinstance(v, str):
                return v.value
            return v

        return plain(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)

    def sha256(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


# -- locating errors ----------------------------------------------------------

def _node_line(root, path: tuple) -> int | None:
    node, line = root, None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    line, nxt = k.start_mark.line + 1, v
                    break
            if nxt is None:
                return line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


class _Reader:
    def __init__(self, data: dict, root, source: str):
        self.data, self.root, self.source = data, root, source

    def fail(self, path: tuple, message: str):
        raise ConfigError(".".join(str(p) for p in path), message, _node_line(self.root, path), self.source)

    def section(self, path: tuple, allowed, required=()) -> dict:
        node = self.data
        for p in path:
            node = node.get(p) if isinstance(node, dict) else None
        if node is None:
            node = {}
        if not isinstance(node, dict):
            self.fail(path, "expected a mapping")
        for key in node:
            if key not in allowed:
                self.fail(path + (key,), f"unknown key (allowed: {', '.join(sorted(allowed))})")
        for key in required:
            if key not in node:
                self.fail(path + (key,), "required field is missing")
        return node

    def number(self, path: tuple, value, kind=float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                self.fail(path, f"expected an integer, got {value!r}")
            return int(value)
        v = float(value)
        if not math.isfinite(v):
            self.fail(path, "must be finite")
        return v

    def numbers(self, path: tuple, value, kind=float, length=None) -> tuple:
        if not isinstance(value, (list, tuple)):
            self.fail(path, f"expected a list, got {value!r}")
        if length is not None and len(value) != length:
            self.fail(path, f"expected {length} entries, got {len(value)}")
        return tuple(self.number(path + (k,), v, kind) for k, v in enumerate(value))

    def choice(self, path: tuple, value, options) -> str:
        if value not in options:
            self.fail(path, f"expected one of {list(options)}, got {value!r}")
        return value

    def build(self, path: tuple, ctor, **kwargs):
        try:
            return ctor(**kwargs)
        except (ValueError, TypeError) as exc:
            self.fail(path, str(exc))


def _resolve_materials(value, base: Path) -> Path:
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        shipped = resources.files("adiheat") / "data" / str(value)
        if shipped.is_file():
            p = Path(str(shipped))
    return p.resolve()


def parse_config_dict(data, source: str = "<config>", base: Path | None = None, root=None) -> RunConfig:
    rd = _Reader(data if isinstance(data, dict) else {}, root, source)
    if not isinstance(data, dict):
        rd.fail((), "expected a mapping at the top level")
    top = rd.section((), {"domain", "grid", "materials_file", "source", "solver", "runner", "exec", "bench",
                          "output_dir", "mode"}, required=("domain", "grid", "materials_file", "source"))
    base = base or Path.cwd()

    d = rd.section(("domain",), {"layer_radii", "core_length", "outer_length", "layer_materials", "source_layer"},
                   required=("layer_radii", "core_length", "outer_length", "layer_materials", "source_layer"))
    mats = d["layer_materials"]
    if not isinstance(mats, list) or not all(isinstance(m, str) for m in mats):
        rd.fail(("domain", "layer_materials"), "expected a list of material names")
    domain = rd.build(("domain",), DomainSpec,
                      layer_radii=rd.numbers(("domain", "layer_radii"), d["layer_radii"]),
                      core_length=rd.number(("domain", "core_length"), d["core_length"]),
                      outer_length=rd.number(("domain", "outer_length"), d["outer_length"]),
                      layer_materials=tuple(mats),
                      source_layer=rd.number(("domain", "source_layer"), d["source_layer"], int))

    g = rd.section(("grid",), {"radial_divisions", "axial_divisions_core", "axial_divisions_outer"},
                   required=("radial_divisions", "axial_divisions_core", "axial_divisions_outer"))
    grid = rd.build(("grid",), GridSpec,
                    radial_divisions=rd.numbers(("grid", "radial_divisions"), g["radial_divisions"], int,
                                                domain.n_layers),
                    axial_divisions_core=rd.number(("grid", "axial_divisions_core"), g["axial_divisions_core"], int),
                    axial_divisions_outer=rd.number(("grid", "axial_divisions_outer"), g["axial_divisions_outer"],
                                                    int))
    try:
        build_grid(domain, grid)
    except ValueError as exc:
        rd.fail(("grid",), str(exc))

    if not isinstance(top["materials_file"], str):
        rd.fail(("materials_file",), "expected a path")
    materials_file = _resolve_materials(top["materials_file"], base)
    if not materials_file.is_file():
        rd.fail(("materials_file",), f"file not found: {materials_file}")

    s = rd.section(("source",), {"t_per", "t_src", "t_trs", "xi", "zeta", "I0", "S_C", "waveform",
                                 "joule_dimensional"}, required=("t_per", "t_src", "t_trs"))
    src_kwargs = {k: rd.number(("source", k), s[k]) for k in ("t_per", "t_src", "t_trs", "xi", "zeta", "I0", "S_C")
                  if k in s and s[k] is not None}
    if "S_C" not in src_kwargs:
        lo, hi = domain.layer_bounds(domain.source_layer)
        src_kwargs["S_C"] = math.pi * (hi * hi - lo * lo)
    if "waveform" in s:
        src_kwargs["waveform"] = rd.choice(("source", "waveform"), s["waveform"], [w.value for w in Waveform])
    if "joule_dimensional" in s:
        if not isinstance(s["joule_dimensional"], bool):
            rd.fail(("source", "joule_dimensional"), "expected true or false")
        src_kwargs["joule_dimensional"] = s["joule_dimensional"]
    source = rd.build(("source",), SourceSpec, **src_kwargs)

    names = {f.name: f for f in dataclasses.fields(SolverConfig)}
    sv = rd.section(("solver",), set(names))
    sv_kwargs = {}
    for k, v in sv.items():
        if k in ("halfpoint_rule", "interface_rule"):
            sv_kwargs[k] = v
        elif k in ("strict_range", "terminal_dirichlet"):
            if not isinstance(v, bool):
                rd.fail(("solver", k), "expected true or false")
            sv_kwargs[k] = v
        elif k == "tau_min" and v is None:
            sv_kwargs[k] = None
        else:
            sv_kwargs[k] = rd.number(("solver", k), v, int if k == "max_iter" else float)
    solver = rd.build(("solver",), SolverConfig, **sv_kwargs)

    r = rd.section(("runner",), {"t_end", "probes", "snapshot_phases", "snapshot_formats", "detector", "band"})
    r_kwargs = {}
    if "t_end" in r:
        r_kwargs["t_end"] = rd.number(("runner", "t_end"), r["t_end"])
        if not r_kwargs["t_end"] > 0:
            rd.fail(("runner", "t_end"), "must be > 0")
    if r.get("probes") is not None:
        if not isinstance(r["probes"], list) or not r["probes"]:
            rd.fail(("runner", "probes"), "expected a non-empty list of [r, z] pairs")
        r_kwargs["probes"] = tuple(rd.numbers(("runner", "probes", k), p, float, 2) for k, p in enumerate(r["probes"]))
    for key, options in (("snapshot_phases", SNAPSHOT_PHASES), ("snapshot_formats", SNAPSHOT_FORMATS)):
        if key in r:
            if not isinstance(r[key], list):
                rd.fail(("runner", key), "expected a list")
            r_kwargs[key] = tuple(rd.choice(("runner", key, k), v, options) for k, v in enumerate(r[key]))
    if "detector" in r:
        if r["detector"] is None:
            r_kwargs["detector"] = None
        else:
            det = rd.section(("runner", "detector"), {"samples_per_period", "tolerance", "min_periods"})
            r_kwargs["detector"] = rd.build(("runner", "detector"), RegimeDetectorConfig, **{
                k: rd.number(("runner", "detector", k), v, float if k == "tolerance" else int)
                for k, v in det.items()})
    if r.get("band") is not None:
        band = rd.numbers(("runner", "band"), r["band"], float, 2)
        if not band[0] < band[1]:
            rd.fail(("runner", "band"), "expected [low, high] with low < high")
        r_kwargs["band"] = band
    runner = RunnerConfig(**r_kwargs)

    e = rd.section(("exec",), {"workers", "chunking", "backend"})
    e_kwargs = {}
    if "workers" in e:
        e_kwargs["workers"] = rd.number(("exec", "workers"), e["workers"], int)
        if e_kwargs["workers"] < 1:
            rd.fail(("exec", "workers"), "must be >= 1")
    if "chunking" in e:
        e_kwargs["chunking"] = rd.choice(("exec", "chunking"), e["chunking"], CHUNKING)
    if e.get("backend") is not None:
        e_kwargs["backend"] = rd.choice(("exec", "backend"), e["backend"], ("cython", "python"))
    exec_cfg = ExecConfig(**e_kwargs)

    b = rd.section(("bench",), {"workers", "steps", "repeats"})
    b_kwargs = {}
    if "workers" in b:
        b_kwargs["workers"] = rd.numbers(("bench", "workers"), b["workers"], int)
        if not b_kwargs["workers"] or min(b_kwargs["workers"]) < 1:
            rd.fail(("bench", "workers"), "expected positive worker counts")
    for k in ("steps", "repeats"):
        if k in b:
            b_kwargs[k] = rd.number(("bench", k), b[k], int)
            if b_kwargs[k] < 1:
                rd.fail(("bench", k), "must be >= 1")
    bench = BenchConfig(**b_kwargs)

    out = top.get("output_dir")
    if out is not None and not isinstance(out, str):
        rd.fail(("output_dir",), "expected a path")
    mode = rd.choice(("mode",), top.get("mode", "simulate"), MODES)
    return RunConfig(domain=domain, grid=grid, materials_file=materials_file, source=source, solver=solver,
                     runner=runner, exec=exec_cfg, bench=bench, output_dir=out, mode=mode)


def shipped_configs() -> list[str]:
    data = resources.files("adiheat") / "data"
    return sorted(p.name[:-5] for p in data.iterdir() if p.name.endswith(".yaml") and not p.name.startswith("materials"))


def resolve_config_path(name: str) -> Path:
    """A file path, or the name of a shipped config such as ``paper_cell``."""
    p = Path(name)
    if p.is_file():
        return p
    shipped = resources.files("adiheat") / "data" / (name if name.endswith(".yaml") else name + ".yaml")
    if shipped.is_file():
        return Path(str(shipped))
    raise FileNotFoundError(f"no config file {name!r} (shipped configs: {', '.join(shipped_configs())})")


def parse_config_text(text: str, source: str = "<config>", base: Path | None = None) -> RunConfig:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("", f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from exc
    return parse_config_dict(data, source, base, root)


def parse_config(path: str | Path) -> RunConfig:
    p = resolve_config_path(str(path))
    return parse_config_text(p.read_text(), str(p), p.parent)
