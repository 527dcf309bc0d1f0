import math

import pytest
import yaml

from adiheat.config import ConfigError, parse_config, parse_config_dict, parse_config_text, shipped_configs

TINY = """
domain:
  layer_radii: [0.24, 0.245, 0.25, 0.2501]
  core_length: 5.0
  outer_length: 4.0
  layer_materials: [copper, insulator, graphite, coating]
  source_layer: 2
grid:
  radial_divisions: [2, 1, 1, 1]
  axial_divisions_core: 4
  axial_divisions_outer: 3
materials_file: materials_synthetic.yaml
source:
  t_per: 0.1
  t_src: 0.01
  t_trs: 1.0e-3
  I0: 0.5742
runner:
  t_end: 0.05
"""


def test_shipped_paper_cell(paper_config):
    c = paper_config
    assert c.domain.layer_radii == (0.24, 0.245, 0.25, 0.2501)
    assert (c.domain.outer_length, c.domain.core_length) == (4.0, 5.0)
    assert c.grid.radial_divisions == (800, 200, 200, 10)
    assert (c.grid.axial_divisions_core, c.grid.axial_divisions_outer) == (100, 80)
    assert (c.source.t_per, c.source.t_src, c.source.t_trs, c.source.I0) == (0.1, 0.01, 1e-4, 0.5742)
    assert c.solver.T0 == 4.2
    assert c.materials_file.is_file()


def test_shipped_list():
    assert {"paper_cell", "regime_demo"} <= set(shipped_configs())


def test_default_cross_section():
    c = parse_config_text(TINY)
    assert c.source.S_C == pytest.approx(math.pi * (0.25 ** 2 - 0.245 ** 2))


def test_missing_field_is_named():
    text = TINY.replace("  t_src: 0.01\n", "")
    with pytest.raises(ConfigError, match=r"<config>:\d+: source\.t_src: required field is missing"):
        parse_config_text(text)


def test_invariant_violation():
    with pytest.raises(ConfigError, match="t_src"):
        parse_config_text(TINY.replace("t_src: 0.01", "t_src: 0.2"))


@pytest.mark.parametrize("old,new,where", [
    ("t_end: 0.05", "t_end: fast", "runner.t_end"),
    ("  I0: 0.5742", "  I0: 0.5742\n  current: 1", "unknown"),
    ("[2, 1, 1, 1]", "[2, 1, 1]", "grid.radial_divisions"),
    ("materials_synthetic.yaml", "nope.yaml", "materials_file"),
    ("t_end: 0.05", "t_end: 0.05\n  snapshot_phases: [noon]", "snapshot_phases"),
])
def test_rejections(old, new, where):
    with pytest.raises(ConfigError, match=where):
        parse_config_text(TINY.replace(old, new))


def test_yaml_syntax_error_has_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text(TINY + "bad: [\n", source="x.yaml")
    assert "x.yaml:" in str(exc.value)


@pytest.mark.parametrize("name", ["paper_cell", "regime_demo"])
def test_dump_round_trip(name, tmp_path):
    c = parse_config(name)
    again = parse_config_dict(yaml.safe_load(c.dump()))
    assert again == c
    assert again.sha256() == c.sha256()
    path = tmp_path / "resolved.yaml"
    path.write_text(c.dump())
    assert parse_config(path) == c


def test_materials_relative_to_config(tmp_path):
    src = parse_config("paper_cell").materials_file
    (tmp_path / "mine.yaml").write_text(src.read_text())
    cfg = tmp_path / "run.yaml"
    cfg.write_text(TINY.replace("materials_synthetic.yaml", "mine.yaml"))
    assert parse_config(cfg).materials_file == tmp_path / "mine.yaml"


def test_unknown_material_name():
    c = parse_config_text(TINY.replace("coating]", "unobtainium]"))
    with pytest.raises(ConfigError, match="unobtainium"):
        c.build_problem()
