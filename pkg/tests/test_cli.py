import shutil
import subprocess

import numpy as np
import pytest

from adiheat.cli import main
from adiheat.config import parse_config
from adiheat.output import read_snapshot_csv, read_trace
from adiheat.runner import resample_period

from test_config import TINY


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY + "  detector: {samples_per_period: 16, tolerance: 1.0e-3, min_periods: 2}\n")
    return path


def header_hash(path):
    first = path.read_text().splitlines()[0]
    return first.split("config_sha256=")[1]


def test_simulate_writes_everything(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--out", str(out), "--t-end", "0.3"]) == 0
    assert "stopped: time" in capsys.readouterr().out
    names = {p.name for p in out.iterdir()}
    assert {"resolved_config.yaml", "trace.csv", "trace_resampled.csv", "snapshot_before_on.csv",
            "snapshot_after_off.csv", "snapshot_final.csv"} <= names
    cfg = parse_config(out / "resolved_config.yaml")
    assert cfg.runner.t_end == 0.3
    hashes = {header_hash(out / n) for n in names if n.endswith(".csv")}
    assert hashes == {cfg.sha256()}
    snap = read_snapshot_csv(out / "snapshot_final.csv", cfg.build_problem().grid)
    assert np.nanmax(snap) > 4.2


def test_resampled_matches_trace(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--out", str(out), "--t-end", "0.3"]) == 0
    t, v = read_trace(out / "trace.csv")
    # the detector also sees the initial state at t = 0
    t = np.concatenate(([0.0], t))
    v = np.vstack([[4.2], v])
    rows = np.loadtxt(out / "trace_resampled.csv", delimiter=",", comments="#", skiprows=2)
    assert rows.shape == (3 * 16, 4)
    for p in range(3):
        expect = resample_period(t, v, 0.1 * p, 0.1, 16)[:, 0]
        np.testing.assert_allclose(rows[rows[:, 0] == p, 3], expect, rtol=0, atol=1e-12)


def test_trace_row_per_step_and_equilibrium(tiny_config, tmp_path):
    text = tiny_config.read_text().replace("I0: 0.5742", "I0: 0.0")
    tiny_config.write_text(text)
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--out", str(out), "--t-end", "0.02",
                 "--snapshot-phase", "off"]) == 0
    t, v = read_trace(out / "trace.csv")
    assert np.all(v == 4.2)
    assert np.all(np.diff(t) > 0)
    assert not (out / "snapshot_before_on.csv").exists()
    assert (out / "snapshot_after_off.csv").exists()


def test_bench_mode(tiny_config, tmp_path, capsys):
    out = tmp_path / "b"
    assert main(["--config", str(tiny_config), "--mode", "bench", "--workers", "1,2", "--out", str(out)]) == 0
    lines = (out / "bench.csv").read_text().splitlines()
    assert lines[2] == "workers,wall_s,speedup,efficiency"
    assert [ln.split(",")[0] for ln in lines[3:]] == ["1", "2"]
    assert "speedup=1.000" in capsys.readouterr().out


def test_validate_mode(tiny_config, tmp_path, capsys):
    assert main(["--config", str(tiny_config), "--mode", "validate", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4 and all(ln.startswith("PASS") for ln in lines)


def test_env_output_dir(tiny_config, tmp_path, monkeypatch):
    monkeypatch.setenv("ADIHEAT_OUT", str(tmp_path / "env"))
    assert main(["--config", str(tiny_config), "--t-end", "0.001"]) == 0
    assert (tmp_path / "env" / "trace.csv").exists()


def test_flag_errors(tiny_config, capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err
    for bad in (["--workers", "0"], ["--t-end", "-1"], ["--snapshot-phase", "noon"], ["--workers", "1,2"]):
        with pytest.raises(SystemExit) as exc:
            main(["--config", str(tiny_config), *bad])
        assert exc.value.code == 2


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(TINY.replace("  t_src: 0.01\n", ""))
    assert main(["--config", str(bad)]) == 2
    assert "source.t_src" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.yaml")]) == 2


def test_abort_writes_last_state(tiny_config, tmp_path, capsys):
    text = tiny_config.read_text() + "solver: {max_iter: 1, tau_min: 1.0e-3}\n"
    tiny_config.write_text(text)
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--out", str(out)]) == 1
    assert "tau_min" in capsys.readouterr().err
    assert (out / "aborted.csv").exists()


@pytest.mark.skipif(shutil.which("adiheat") is None, reason="console script not installed")
def test_console_script(tiny_config, tmp_path):
    run = subprocess.run(["adiheat", "--config", str(tiny_config), "--out", str(tmp_path), "--t-end", "0.001"],
                         capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    assert (tmp_path / "resolved_config.yaml").exists()
