import json
import re

import numpy as np
import pytest

from conftest import small_pendulum_config
from regime_scout import cli, outputs
from regime_scout.config import config_to_dict, preset_document

STOP_REASONS = {"uncertainty", "t_max", "budget"}


@pytest.fixture(scope="module")
def small_json(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps(config_to_dict(small_pendulum_config())))
    return path


@pytest.fixture(scope="module")
def run_dir(small_json, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["explore", "--config", str(small_json), "--out", str(out)]) == 0
    return out


def test_explore_writes_every_file(run_dir):
    for name in outputs.RUN_FILES:
        assert (run_dir / name).is_file()
    report = json.loads((run_dir / outputs.REPORT).read_text())
    assert report["stop_reason"] in STOP_REASONS
    _, rows = outputs.read_table(run_dir / outputs.SAMPLES)
    assert len(rows) == report["n_samples"]
    log = [json.loads(line) for line in (run_dir / outputs.RUN_LOG).read_text().splitlines()]
    assert len(log) == report["iterations"]


def test_explore_is_byte_identical_on_rerun(small_json, run_dir, tmp_path):
    assert cli.main(["explore", "--config", str(small_json), "--out", str(tmp_path)]) == 0
    for name in outputs.RUN_FILES:
        assert (tmp_path / name).read_bytes() == (run_dir / name).read_bytes(), name


def test_contours_replay_from_grid(run_dir):
    _, rows = outputs.read_table(run_dir / outputs.CONTOURS)
    assert outputs.replay_contours(run_dir) == rows


def test_bad_config_exits_two(tmp_path, capsys):
    doc = preset_document("pendulum")
    doc["system"]["free_axes"][0]["min"] = 9.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["explore", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "system.free_axes[0]" in capsys.readouterr().err
    assert cli.main(["explore", "--config", "no-such-preset", "--out", str(tmp_path / "o")]) == 2


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as err:
        cli.main(["simulate", "--config", "pendulum"])
    assert err.value.code == 2


def test_simulate_rows_and_time_range(tmp_path):
    out = tmp_path / "ts.csv"
    assert cli.main(["simulate", "--config", "pendulum", "--theta", "0.5,0.2", "--out", str(out)]) == 0
    header, rows = outputs.read_table(out)
    # the pendulum is observed through its angle only
    assert header == ["t", "x"]
    assert len(rows) == 1024
    assert float(rows[0][0]) == 0.0 and float(rows[-1][0]) == pytest.approx(200.0)


def test_simulate_rejects_theta_outside_box(tmp_path):
    out = tmp_path / "ts.csv"
    assert cli.main(["simulate", "--config", "pendulum", "--theta", "0,9", "--out", str(out)]) == 2
    assert cli.main(["simulate", "--config", "pendulum", "--theta", "0,a", "--out", str(out)]) == 2


def test_simulate_lorenz_rho_25_keeps_moving(tmp_path):
    from regime_scout.dynamics import converged_to_fixed_point

    out = tmp_path / "lz.csv"
    assert cli.main(["simulate", "--config", "lorenz", "--theta", "1,25", "--out", str(out)]) == 0
    header, rows = outputs.read_table(out)
    values = np.array([[float(v) for v in row[1:]] for row in rows]).T
    assert header == ["t", "x", "y", "z"]
    assert not converged_to_fixed_point(values)


def test_oracle_grid_labels(tmp_path):
    out = tmp_path / "oracle.csv"
    assert cli.main(["oracle", "--config", "pendulum", "--grid", "5", "--out", str(out)]) == 0
    header, rows = outputs.read_table(out)
    assert header == ["x0", "v0", "oracle_label"] and len(rows) == 25
    from regime_scout.config import load_preset
    from regime_scout.oracles import pendulum_labels

    spec = load_preset("pendulum").system
    assert pendulum_labels(spec, np.array([[0.0, 2.4], [0.0, 0.1]])).tolist() == [1, 0]
    pts = np.array([[float(r[0]), float(r[1])] for r in rows])
    assert [int(r[2]) for r in rows] == pendulum_labels(spec, pts).tolist()


def test_oracle_needs_two_axes(tmp_path):
    doc = preset_document("pendulum")
    doc["system"]["free_axes"] = doc["system"]["free_axes"][:1]
    doc["system"]["ics"] = {"v0": 0.0}
    path = tmp_path / "one.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["oracle", "--config", str(path), "--grid", "5", "--out", str(tmp_path / "o.csv")]) == 2


@pytest.mark.parametrize("fig", ["regimes", "uncertainty", "surface", "pca"])
def test_plot_is_deterministic(run_dir, tmp_path, fig):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert cli.main(["plot", "--run", str(run_dir), "--fig", fig, "--out", str(a)]) == 0
    assert cli.main(["plot", "--run", str(run_dir), "--fig", fig, "--out", str(b)]) == 0
    text = a.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert a.read_bytes() == b.read_bytes()


def test_regimes_plot_marks_every_sample(run_dir, tmp_path):
    out = tmp_path / "r.svg"
    cli.main(["plot", "--run", str(run_dir), "--fig", "regimes", "--out", str(out)])
    _, rows = outputs.read_table(run_dir / outputs.SAMPLES)
    assert out.read_text().count('class="marker"') == len(rows)


def test_pca_plot_uses_several_colours(run_dir, tmp_path):
    out = tmp_path / "p.svg"
    cli.main(["plot", "--run", str(run_dir), "--fig", "pca", "--out", str(out)])
    fills = set(re.findall(r'class="marker"[^>]*fill="(#[0-9a-f]{6})"', out.read_text()))
    assert len(fills) >= 2


def test_plot_on_incomplete_run_exits_two(run_dir, tmp_path):
    (tmp_path / outputs.SAMPLES).write_bytes((run_dir / outputs.SAMPLES).read_bytes())
    assert cli.main(["plot", "--run", str(tmp_path), "--fig", "regimes", "--out", str(tmp_path / "x.svg")]) == 2


@pytest.mark.parametrize("value, code", [("1", 0), ("0", 2), ("lots", 2)])
def test_thread_limit_variable(monkeypatch, tmp_path, value, code):
    monkeypatch.setenv("REGIME_SCOUT_THREADS", value)
    args = ["simulate", "--config", "pendulum", "--theta", "0,0", "--out", str(tmp_path / "t.csv")]
    assert cli.main(args) == code
