import numpy as np
import pytest
from hypothesis import given, strategies as st

from adiheat.materials import (MaterialTable, PackedTables, Property, TableRangeError, constant_material,
                               eval_property, half_point_lambda, interface_lambda, load_materials,
                               parse_materials)

TAB = MaterialTable("t", 1.0, [[4.2, 1.0], [40.0, 2.0]], [[4.2, 1.0], [40.0, 2.0]])


def test_knot_and_midpoint():
    assert eval_property(TAB, "cv", 4.2) == 1.0
    assert eval_property(TAB, "cv", 22.1) == pytest.approx(1.5, abs=1e-15)


@given(st.floats(4.2, 300.0))
def test_constant_table(T):
    m = MaterialTable("c", 1.0, [[4.2, 7.0], [300.0, 7.0]], [[4.2, 7.0], [300.0, 7.0]])
    assert eval_property(m, Property.LAMBDA, T) == 7.0


def test_clamp_and_strict(caplog):
    caplog.set_level("WARNING", logger="adiheat.materials")
    assert eval_property(TAB, "cv", 100.0) == 2.0
    assert "outside table domain" in caplog.text
    with pytest.raises(TableRangeError):
        eval_property(TAB, "cv", 1.0, strict=True)


def test_half_point():
    lin = MaterialTable("lin", 1.0, [[1.0, 1.0], [100.0, 1.0]], [[1.0, 1.0], [100.0, 100.0]])
    assert half_point_lambda(lin, 10.0, 30.0) == pytest.approx(20.0, rel=1e-14)
    assert half_point_lambda(TAB, 12.0, 12.0) == eval_property(TAB, "lambda", 12.0)
    assert half_point_lambda(lin, 10.0, 30.0, rule="mean_value") == pytest.approx(20.0, rel=1e-14)


def test_interface_rules():
    a, b = constant_material("a", 1, 1, 2.0), constant_material("b", 1, 1, 6.0)
    assert interface_lambda(a, b, 5.0, 6.0) == 2.0
    assert interface_lambda(a, b, 5.0, 6.0, interface="harmonic") == pytest.approx(3.0)


@pytest.mark.parametrize("bad,msg", [
    ({"materials": {"x": {"rho": 1, "cv": [[1, 1]]}}}, "lambda is missing"),
    ({"materials": {"x": {"rho": 1, "cv": [[2, 1], [1, 1]], "lambda": [[1, 1]]}}}, "strictly increasing"),
    ({"materials": {"x": {"rho": 1, "cv": [[1, -1]], "lambda": [[1, 1]]}}}, "> 0"),
    ({"materials": {"x": {"rho": 1, "cv": [[1, 1]], "lambda": [[1, 1]], "k": 1}}}, "unknown keys"),
    ({"other": {}}, "materials"),
])
def test_parse_errors(bad, msg):
    with pytest.raises(ValueError, match=msg):
        parse_materials(bad)


def test_shipped_tables(paper_config):
    mats = load_materials(paper_config.materials_file)
    assert set(paper_config.domain.layer_materials) <= set(mats)
    src = mats[paper_config.domain.layer_materials[paper_config.domain.source_layer]]
    assert src.chi_table.shape[0] > 0
    for m in mats.values():
        assert m.covers(4.2, 300.0)


def test_packed_tables_roundtrip(synthetic_layers):
    pk = PackedTables.from_layers(synthetic_layers)
    for m, mat in enumerate(synthetic_layers):
        n = pk.counts[Property.CV][m]
        np.testing.assert_array_equal(pk.knots[Property.CV][m, :n], mat.cv_table[:, 0])
        np.testing.assert_array_equal(pk.values[Property.CV][m, :n], mat.cv_table[:, 1])
