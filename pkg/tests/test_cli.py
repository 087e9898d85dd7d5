"""Command line interface: parsing, config handling, exit codes, outputs."""

import json
import math

import numpy as np
import pytest

from herald_sense import (
    ConfigError,
    EfficiencyPair,
    eta_p_of_alpha,
    ingest_samples,
    lossy_mean_x,
    lossy_sensitivity,
    lossy_var_x,
)
from herald_sense.cli import (
    EXIT_CONFIG,
    EXIT_INGEST,
    EXIT_NUMERIC,
    EXIT_OK,
    RunConfig,
    main,
    parse_phi_scalar,
    parse_phi_sweep,
)

PI = math.pi


@pytest.mark.parametrize(
    "text,expected",
    [
        ("pi", PI),
        ("pi+0.05", PI + 0.05),
        ("pi-0.1", PI - 0.1),
        ("PI + 0.2", PI + 0.2),
        ("3.5", 3.5),
        (2, 2.0),
        (PI, PI),
    ],
)
def test_parse_phi_scalar(text, expected):
    assert parse_phi_scalar(text) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("text", ["2pi", "piX", "", "pi+", "pi*2"])
def test_parse_phi_scalar_rejects(text):
    with pytest.raises(ConfigError):
        parse_phi_scalar(text)


def test_parse_phi_sweep():
    grid = parse_phi_sweep("pi-0.3:pi+0.3:0.1")
    assert len(grid) == 7
    assert grid[0] == pytest.approx(PI - 0.3, abs=1e-12)
    assert grid[-1] == pytest.approx(PI + 0.3, abs=1e-9)
    assert np.allclose(np.diff(grid), 0.1)

    assert len(parse_phi_sweep("0:1:0.25")) == 5
    assert len(parse_phi_sweep("2:2:0.5")) == 1


@pytest.mark.parametrize("text", ["1:2", "1:2:3:4", "2:1:0.5", "1:2:0", "1:2:-0.1"])
def test_parse_phi_sweep_rejects(text):
    with pytest.raises(ConfigError):
        parse_phi_sweep(text)


def test_runconfig_json_round_trip():
    config = RunConfig(
        alpha=2.5,
        phi="pi-0.3:pi+0.3:0.05",
        eta_p=0.8,
        seed=42,
        alphas=(1.0, 2.0),
        mu_sweep=(100, 200),
        phi_true="pi+0.02",
        simulate=True,
        out_path="x.csv",
    )
    payload = json.loads(json.dumps(config.to_dict()))
    assert RunConfig.from_dict(payload) == config


def test_runconfig_rejects_unknown_keys(tmp_path):
    with pytest.raises(ConfigError, match="unknown config fields"):
        RunConfig.from_dict({"alpha": 1.0, "alhpa": 2.0})
    bad = tmp_path / "bad.json"
    bad.write_text('{"frobnicate": 1}')
    with pytest.raises(ConfigError):
        RunConfig.from_json_file(bad)
    not_json = tmp_path / "nj.json"
    not_json.write_text("{")
    with pytest.raises(ConfigError, match="not valid JSON"):
        RunConfig.from_json_file(not_json)


def test_runconfig_validate():
    with pytest.raises(ConfigError):
        RunConfig(alpha=math.inf).validate()
    with pytest.raises(ConfigError):
        RunConfig(mu=0).validate()
    with pytest.raises(ConfigError):
        RunConfig(alphas=()).validate()


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv("HERALD_SENSE_SEED", raising=False)
    assert RunConfig().resolved_seed() == 0
    monkeypatch.setenv("HERALD_SENSE_SEED", "123")
    assert RunConfig().resolved_seed() == 123
    assert RunConfig(seed=5).resolved_seed() == 5
    monkeypatch.setenv("HERALD_SENSE_SEED", "abc")
    with pytest.raises(ConfigError):
        RunConfig().resolved_seed()


def test_estimate_requires_exactly_one_source(capsys):
    assert main(["estimate"]) == EXIT_CONFIG
    assert "config error:" in capsys.readouterr().err


def test_estimate_missing_input_file(capsys, tmp_path):
    code = main(["estimate", str(tmp_path / "absent.csv")])
    assert code == EXIT_INGEST
    assert "ingest error:" in capsys.readouterr().err


def test_estimate_header_only_file(capsys, tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("p1,p2\n")
    code = main(["estimate", str(path)])
    assert code == EXIT_NUMERIC
    assert "numeric error:" in capsys.readouterr().err


def test_calibrate_requires_sweep_and_out(capsys, tmp_path):
    assert main(["calibrate", "--phi", "pi-0.1:pi+0.1:0.1"]) == EXIT_CONFIG
    assert main(["calibrate", "--phi", "pi", "--out", str(tmp_path / "c.csv")]) == EXIT_CONFIG
    code = main(
        ["calibrate", "--phi", "pi-0.1:pi+0.1:0.1", "--out", str(tmp_path / "c.csv"),
         "--mc-samples", "1000", "--set-size", "600"]
    )
    assert code == EXIT_CONFIG  # not a multiple of set_size
    capsys.readouterr()


def test_bad_phase_flag(capsys):
    assert main(["estimate", "--simulate", "--phi", "nope", "--mu", "10"]) == EXIT_CONFIG
    capsys.readouterr()


def test_unknown_command_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "herald-sense" in capsys.readouterr().out


def test_optimize_json(capsys):
    code = main(["optimize", "--alpha", "1.13", "--phi", "pi", "--g2", "2e-6"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["herald_sense_version"]
    result = payload["result"]
    assert result["s_opt"] == pytest.approx((2.0 / 3.0) * 1.13**2, rel=1e-9)
    assert result["qfi"] == pytest.approx(2 * 1.13**2 + 1, rel=1e-12)
    assert result["npt"] == pytest.approx(1.0, abs=1e-12)
    assert result["heralding_rate"] == pytest.approx(2e-6, rel=1e-12)
    c = np.array(result["c_opt"])
    target = np.array([0.0, 1.0, 0.0, -1.0])
    cosine = float(c @ target) / (np.linalg.norm(c) * np.linalg.norm(target))
    assert abs(cosine) == pytest.approx(1.0, abs=1e-9)
    assert result["s_difference"] <= result["s_opt"] + 1e-12


def test_estimate_simulate(capsys):
    code = main(
        ["estimate", "--simulate", "--alpha", "1.13", "--phi", "pi+0.05",
         "--mu", "10000", "--seed", "7", "--bootstrap", "200"]
    )
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["seed"] == 7
    result = payload["result"]
    s_theory = lossy_sensitivity(1.13, EfficiencyPair(eta_p_of_alpha(1.13), 0.59))
    three_sigma = 3.0 * math.sqrt(1.0 / (10000 * s_theory))
    assert abs(result["phi_hat"] - (PI + 0.05)) < three_sigma
    assert result["mu"] == 10000
    assert result["eta_p"] == pytest.approx(eta_p_of_alpha(1.13), rel=1e-12)


def test_env_seed_matches_flag(capsys, monkeypatch):
    args = ["estimate", "--simulate", "--mu", "200", "--bootstrap", "100"]
    monkeypatch.delenv("HERALD_SENSE_SEED", raising=False)
    assert main(args + ["--seed", "7"]) == EXIT_OK
    with_flag = capsys.readouterr().out
    monkeypatch.setenv("HERALD_SENSE_SEED", "7")
    assert main(args) == EXIT_OK
    with_env = capsys.readouterr().out
    assert with_env == with_flag


def _read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# herald-sense ")
    header = lines[1].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    return header, data


def test_calibrate_output(tmp_path):
    out = tmp_path / "cal.csv"
    code = main(
        ["calibrate", "--alpha", "1.13", "--phi", "pi-0.2:pi+0.2:0.1",
         "--mc-samples", "4000", "--set-size", "1000", "--seed", "3",
         "--out", str(out)]
    )
    assert code == EXIT_OK
    header, data = _read_csv(out)
    assert header == ["phi", "mean_x_theory", "var_x_theory", "mean_x_mc", "se_mc"]
    assert data.shape == (5, 5)
    eff = EfficiencyPair(eta_p_of_alpha(1.13), 0.59)
    for phi, mean_th, var_th, mean_mc, se in data:
        assert mean_th == pytest.approx(lossy_mean_x(1.13, phi, eff), rel=1e-12)
        assert var_th == pytest.approx(lossy_var_x(1.13, phi, eff), rel=1e-12)
        assert abs(mean_mc - mean_th) < 6 * se
    meta = json.loads((tmp_path / "cal.meta.json").read_text())
    assert meta["config"]["alpha"] == 1.13
    assert meta["config"]["seed"] == 3


def test_sensitivity_output(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code = main(
        ["sensitivity", "--alphas", "0,1.13", "--mu", "100", "--bootstrap", "100",
         "--seed", "5", "--out", str(out)]
    )
    assert code == EXIT_OK
    assert "alpha=0" in capsys.readouterr().err
    header, data = _read_csv(out)
    assert header == ["alpha", "s_sim", "s_sim_se", "s_theory", "eta_p_used"]
    assert data.shape == (2, 5)
    assert math.isnan(data[0, 1])
    row = data[1]
    eff = EfficiencyPair(row[4], 0.59)
    assert row[3] == pytest.approx(lossy_sensitivity(1.13, eff), rel=1e-12)
    assert row[1] > 0


def test_sensitivity_eta_p_override(tmp_path):
    out = tmp_path / "scan.csv"
    code = main(
        ["sensitivity", "--alphas", "1.13", "--eta-p", "0.75", "--mu", "100",
         "--bootstrap", "100", "--seed", "5", "--out", str(out)]
    )
    assert code == EXIT_OK
    _, data = _read_csv(out)
    assert data[0, 4] == 0.75


def test_mu_sweep_output(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(
        ["estimate", "--simulate", "--alpha", "1.13", "--phi", "pi+0.05",
         "--seed", "11", "--bootstrap", "100", "--mu-sweep", "500,200",
         "--out", str(out)]
    )
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["result"]["mu_sweep_csv"] == str(out)
    header, data = _read_csv(out)
    assert header == ["mu", "var_phi", "var_phi_theory"]
    assert list(data[:, 0]) == [200.0, 500.0]
    s_theory = lossy_sensitivity(1.13, EfficiencyPair(eta_p_of_alpha(1.13), 0.59))
    assert data[0, 2] == pytest.approx(1.0 / (200 * s_theory), rel=1e-12)
    assert np.all(data[:, 1] > 0)


def test_mu_sweep_requires_simulate(tmp_path, capsys):
    path = tmp_path / "in.csv"
    path.write_text("p1,p2\n0.1,0.2\n0.2,0.1\n")
    code = main(["estimate", str(path), "--mu-sweep", "20,50", "--out", str(tmp_path / "s.csv")])
    assert code == EXIT_CONFIG
    capsys.readouterr()


def test_sample_round_trip(tmp_path):
    out = tmp_path / "records.csv"
    code = main(
        ["sample", "--alpha", "1.13", "--phi", "pi+0.05", "--n-records", "400",
         "--seed", "2", "--out", str(out)]
    )
    assert code == EXIT_OK
    records = ingest_samples(out)
    assert records.shape == (400, 2)
    meta = json.loads((tmp_path / "records.meta.json").read_text())
    assert meta["n_records"] == 400
    assert meta["seed"] == 2
    assert meta["config"]["phi"] == "pi+0.05"


def test_byte_identical_reruns(tmp_path, monkeypatch):
    args = ["sample", "--alpha", "1.0", "--phi", "pi-0.1", "--n-records", "300",
            "--seed", "9", "--out", "records.csv"]
    dirs = (tmp_path / "a", tmp_path / "b")
    for d in dirs:
        d.mkdir()
        monkeypatch.chdir(d)
        assert main(args) == EXIT_OK
    a, b = dirs
    assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()
    assert (a / "records.meta.json").read_bytes() == (b / "records.meta.json").read_bytes()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"alpha": 2.0, "seed": 11, "g_squared": 5e-7}))
    code = main(["optimize", "--config", str(cfg), "--alpha", "1.13"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["alpha"] == 1.13
    assert payload["config"]["seed"] == 11
    assert payload["config"]["g_squared"] == 5e-7
    assert payload["result"]["heralding_rate"] == pytest.approx(5e-7, rel=1e-12)
