import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adiheat.geometry import (DomainSpec, GridError, GridSpec, build_grid, cell_metrics, layer_index,
                              nearest_cell)
from adiheat.runner import probe

PAPER = DomainSpec((0.24, 0.245, 0.25, 0.2501), 5.0, 4.0, ("a", "b", "c", "d"), 2)


def test_paper_cell_dimensions():
    g = build_grid(PAPER, GridSpec((800, 200, 200, 10), 100, 80))
    assert g.shape == (100, 1210)
    assert g.nr_core == 800 and g.nz_outer == 80
    assert g.mask.sum() == 80 * 1210 + 20 * 800


def test_single_cell():
    g = build_grid(DomainSpec((1.0,), 1.0, 1.0, ("m",), 0), GridSpec((1,), 1, 1))
    np.testing.assert_array_equal(g.r_centers, [0.5])
    np.testing.assert_array_equal(g.h, [1.0])


def test_two_layer_centres():
    g = build_grid(DomainSpec((1.0, 1.5), 1.0, 1.0, ("a", "b"), 0), GridSpec((2, 1), 1, 1))
    np.testing.assert_allclose(g.r_centers, [0.25, 0.75, 1.25], rtol=0, atol=1e-15)


def test_uniform_hbar():
    g = build_grid(DomainSpec((1.0,), 1.0, 1.0, ("m",), 0), GridSpec((10,), 4, 4))
    for i in range(1, 9):
        assert cell_metrics(g, i, 0)[1] == pytest.approx(0.1, abs=1e-15)


def test_interface_spacing():
    # cell widths 0.1 then 0.01: the centres across the interface are (0.1 + 0.01) / 2 apart
    g = build_grid(DomainSpec((1.0, 1.1), 1.0, 1.0, ("a", "b"), 0), GridSpec((10, 10), 2, 2))
    assert g.dr[10] == pytest.approx(0.055, abs=1e-14)
    assert cell_metrics(g, 9, 0)[1] == pytest.approx((0.1 + 0.055) / 2, abs=1e-14)
    assert cell_metrics(g, 10, 0)[1] == pytest.approx((0.055 + 0.01) / 2, abs=1e-14)


def test_axis_and_surface_faces():
    g = build_grid(PAPER, GridSpec((8, 2, 2, 1), 5, 4))
    assert cell_metrics(g, 0, 0)[3] == 0.0
    assert g.r_half[-1] == PAPER.r_max
    r, hb, eb, lo, hi = cell_metrics(g, 3, 1)
    assert lo == pytest.approx(0.5 * (g.r_centers[2] + g.r_centers[3]))
    assert hi == pytest.approx(0.5 * (g.r_centers[3] + g.r_centers[4]))


def test_layer_index_examples():
    g = build_grid(PAPER, GridSpec((800, 200, 200, 10), 100, 80))
    for r, m in ((0.1, 0), (0.2475, 2), (0.25005, 3)):
        i, j = nearest_cell(g, r, 0.0)
        assert layer_index(g, i, j) == m


def test_masked_cell_rejected():
    g = build_grid(PAPER, GridSpec((8, 2, 2, 1), 5, 4))
    with pytest.raises(IndexError):
        cell_metrics(g, 10, 4)


@pytest.mark.parametrize("radii,core,outer", [((0.2, 0.1), 1, 1), ((1.0,), 1, 2), ((-1.0,), 1, 1)])
def test_invalid_domain(radii, core, outer):
    with pytest.raises(GridError):
        DomainSpec(radii, core, outer, tuple("m" * len(radii)), 0)


def test_invalid_divisions():
    with pytest.raises(GridError):
        build_grid(PAPER, GridSpec((8, 2, 2, 1), 4, 4))
    with pytest.raises(GridError):
        build_grid(PAPER, GridSpec((8, 2, 2), 5, 4))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 12), min_size=1, max_size=4), st.integers(1, 6), st.integers(1, 6))
def test_metrics_telescope(counts, nz_outer, nz_ext):
    radii = tuple(np.cumsum(np.linspace(0.5, 1.5, len(counts))))
    dom = DomainSpec(radii, 2.0, 1.0, tuple("m" * len(counts)), 0)
    g = build_grid(dom, GridSpec(tuple(counts), nz_outer + nz_ext, nz_outer))
    # control volumes tile the radius and the length exactly
    assert np.sum(g.hbar) == pytest.approx(dom.r_max, rel=1e-12)
    assert np.sum(g.etabar) == pytest.approx(dom.core_length, rel=1e-12)
    assert np.all(g.hbar > 0) and np.all(g.etabar > 0)
    np.testing.assert_allclose(np.diff(g.r_half), g.hbar, rtol=1e-12)
    # every interface radius is a cell edge
    edges = np.cumsum(g.h)
    for r in radii:
        assert np.min(np.abs(edges - r)) < 1e-12


def test_probe_locations():
    g = build_grid(PAPER, GridSpec((8, 2, 2, 1), 5, 4))
    field = np.arange(g.mask.size, dtype=float).reshape(g.shape)
    assert probe(field, g, (PAPER.r_max - 1e-9, 0.0)) == field[0, g.nr - 1]
    assert probe(field, g, (g.r_centers[5], g.z_centers[2])) == field[2, 5]
    assert probe(field, g, (0.0, g.z_centers[3])) == field[3, 0]
    with pytest.raises(ValueError):
        probe(field, g, (0.245, 4.5))
