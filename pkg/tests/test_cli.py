"""Unit tests for config loading, CSV/SVG emission, and CLI dispatch."""

import json

import pytest

from swipt_ee.cli import (
    CSV_HEADER,
    ConfigError,
    RunConfig,
    config_from_dict,
    emit_csv,
    emit_svg,
    load_config,
    run,
)
from swipt_ee.harness import SweepRow

SMALL = {
    "n_trials": 2,
    "p_max_dbm_grid": [22.0],
    "inr_db_list": [10.0],
    "seed": 3,
    "rho_grid_m": 50,
}


def write_config(tmp_path, data, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_config_round_trip():
    cfg = config_from_dict(SMALL)
    assert config_from_dict(cfg.to_dict()) == cfg
    assert cfg.system_params().p_max_w == pytest.approx(10 ** ((22 - 30) / 10))


def test_config_rejects_unknown_and_bad_types():
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_dict({"p_max_dbw": 22.0})
    with pytest.raises(ConfigError):
        config_from_dict({"n_trials": 2.5})
    with pytest.raises(ConfigError):
        config_from_dict({"p_max_dbm_grid": []})
    with pytest.raises(ConfigError):
        config_from_dict({"scheme": "turbo"})
    with pytest.raises(ConfigError):
        config_from_dict({"eta": 1.7})       # unit validation at load time


def test_load_config_diagnostics(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_trials": }')
    with pytest.raises(ConfigError, match="line 1"):
        load_config(str(bad))
    assert load_config(None) == RunConfig()


def test_emit_csv_schema(tmp_path):
    row = SweepRow(22.0, 10.0, "proposed", 3264090.1234567891, 3.4e7,
                   0.123456789123, 0.17, 1.0, 2)
    out = tmp_path / "t.csv"
    text = emit_csv([row], str(out))
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    cells = lines[1].split(",")
    assert cells[:3] == ["22", "10", "proposed"]
    assert cells[3] == "3264090.12"          # 9 significant digits
    assert cells[8] == "2"
    assert out.read_text() == text
    assert emit_csv([row], str(out)) == text     # identical bytes on re-run
    with pytest.raises(ValueError):
        emit_csv([], str(out))


def test_emit_svg_polylines(tmp_path):
    series = {
        f"inr={inr}dB {scheme}": [(6.0, 0.0), (22.0, 3.2e6), (36.0, 3.2e6)]
        for inr in (0, 10, 50) for scheme in ("proposed", "baseline")
    }
    text = emit_svg(series, str(tmp_path / "t.svg"))
    assert text.count("<polyline") == 6
    assert "p_max_dbm" in text and "avg_ee_bit_per_joule" in text


def test_cli_solve_deterministic(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert run(["solve", "--config", cfg, "--seed", "7", "--output", out1]) == 0
    assert run(["solve", "--config", cfg, "--seed", "7", "--output", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()
    doc = json.load(open(out1))
    assert doc["feasible"] is True
    assert len(doc["p_w"]) == 128


def test_cli_exit_codes(tmp_path):
    cfg_bad = write_config(tmp_path, {"nope": 1}, "bad.json")
    assert run(["solve", "--config", cfg_bad]) == 1
    # a 6 dBm budget cannot reach the harvest floor at 10 m
    cfg_inf = write_config(tmp_path, {**SMALL, "p_max_dbm": 6.0}, "inf.json")
    assert run(["solve", "--config", cfg_inf,
                "--output", str(tmp_path / "o.json")]) == 2
    assert run(["plot", "--input", str(tmp_path / "missing.csv"),
                "--output", str(tmp_path / "o.svg")]) == 3


def test_cli_sweep_and_plot(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    csv_path = str(tmp_path / "s.csv")
    svg_path = str(tmp_path / "s.svg")
    assert run(["sweep", "--config", cfg, "--output", csv_path]) == 0
    lines = open(csv_path).read().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3                       # 1 point x 2 schemes
    assert run(["plot", "--input", csv_path, "--output", svg_path]) == 0
    assert "<svg" in open(svg_path).read()


def test_cli_convergence(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    out = str(tmp_path / "conv.csv")
    assert run(["convergence", "--config", cfg, "--output", out]) == 0
    lines = open(out).read().strip().split("\n")
    assert lines[0] == "p_max_dbm,inr_db,iteration,avg_ee_bit_per_joule"
    assert len(lines) == 1 + 20                  # default l_max iterations
