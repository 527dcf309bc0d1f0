import logging

import numpy as np
import pytest

from adiheat.config import parse_config
from adiheat.geometry import DomainSpec, GridSpec, build_grid
from adiheat.materials import load_materials

_acceptance = []


@pytest.fixture(scope="session")
def paper_config():
    return parse_config("paper_cell")


@pytest.fixture(scope="session")
def synthetic_layers(paper_config):
    mats = load_materials(paper_config.materials_file)
    return [mats[n] for n in paper_config.domain.layer_materials]


@pytest.fixture(scope="session")
def small_paper_grid(paper_config):
    """Paper geometry on a 64 x 32 grid."""
    return build_grid(paper_config.domain, GridSpec((40, 10, 10, 4), 32, 26))


@pytest.fixture
def uniform_cylinder():
    def make(nr, nz, R=1.0, L=1.0):
        return build_grid(DomainSpec((R,), L, L, ("m",), 0), GridSpec((nr,), nz, nz))
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """Record a one-line result for the acceptance summary."""
    def note(text):
        request.node.user_properties.append(("criterion", text))
    return note


@pytest.fixture(autouse=True)
def _quiet_range_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="adiheat.materials")
    yield


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    detail = "; ".join(v for k, v in report.user_properties if k == "criterion")
    name = report.nodeid.split("::")[-1]
    _acceptance.append((name, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _acceptance:
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{tag} {name}: {detail}")
