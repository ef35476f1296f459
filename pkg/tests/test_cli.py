import json

import numpy as np
import pytest

from lipschitz_rl.cli import RunConfig, main
from lipschitz_rl.data_io import load_prices, read_report
from lipschitz_rl.errors import ConfigError


@pytest.fixture
def bars_file(tmp_path):
    path = tmp_path / "bars.csv"
    assert main(["-q", "synth", "--ohlcv", "--steps", "40", "--seed", "7",
                 "--output", str(path)]) == 0
    return path


def test_run_currency(tmp_path, bars_file, capsys):
    out = tmp_path / "rep.csv"
    assert main(["run", "--scenario", "currency", "--input", str(bars_file), "--seed", "7",
                 "--output", str(out)]) == 0
    rep = read_report(out)
    assert rep.seed == 7 and len(rep.steps) == 38
    assert rep.config["run"]["epsilon"] == 0.1
    assert "cum_realized=" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path, bars_file):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["run", "--input", str(bars_file), "--format", "json",
                     "--output", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_run_allocation_writes_both_reports(tmp_path):
    prices = tmp_path / "p.csv"
    assert main(["synth", "--steps", "120", "--products", "4", "--seed", "1",
                 "--output", str(prices)]) == 0
    out = tmp_path / "alloc.csv"
    assert main(["run", "--scenario", "allocation", "--input", str(prices), "--seed", "1",
                 "--output", str(out)]) == 0
    assert read_report(out).config["mode"] == "real"
    assert read_report(tmp_path / "alloc_dreams.csv").config["mode"] == "dream"


def test_default_output_dir_from_environment(tmp_path, bars_file, monkeypatch):
    monkeypatch.setenv("LIPRL_OUTPUT_DIR", str(tmp_path / "outdir"))
    assert main(["run", "--input", str(bars_file), "--seed", "3"]) == 0
    assert (tmp_path / "outdir" / "report_currency_seed3.csv").exists()


def test_config_file_and_flag_override(tmp_path, bars_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilon": 0.3, "actions": 5, "seed": 2}))
    out = tmp_path / "r.json"
    assert main(["run", "--config", str(cfg), "--input", str(bars_file), "--seed", "4",
                 "--output", str(out), "--format", "json"]) == 0
    run = read_report(out).config["run"]
    assert (run["epsilon"], run["actions"], run["seed"]) == (0.3, 5, 4)


def test_unknown_config_keys_are_rejected(tmp_path, bars_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilonn": 0.3}))
    assert main(["run", "--config", str(cfg), "--input", str(bars_file)]) == 2
    assert "epsilonn" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"bogus": 1})


@pytest.mark.parametrize("flags", [
    ["--epsilon", "-0.5"],
    ["--beta", "1.0"],
    ["--extension", "blend:2"],
    ["--actions", "0"],
])
def test_config_errors_exit_2(bars_file, flags):
    assert main(["run", "--input", str(bars_file), *flags]) == 2


def test_missing_input_exits_3(tmp_path):
    assert main(["run", "--input", str(tmp_path / "nope.csv")]) == 3


def test_domain_error_exits_4(tmp_path):
    prices = tmp_path / "flat.csv"
    prices.write_text("t,product_1,product_2,product_3,product_4\n"
                      + "".join(f"{t},0,0,0,0\n" for t in range(10)))
    assert main(["run", "--scenario", "allocation", "--input", str(prices)]) == 4


def test_synth_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["synth", "--steps", "800", "--products", "4", "--seed", "1",
                     "--output", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert load_prices(a).values.shape == (800, 4)


def test_synth_zero_volatility_is_linear(tmp_path):
    p = tmp_path / "lin.csv"
    assert main(["synth", "--steps", "20", "--products", "2", "--drift", "0.25",
                 "--volatility", "0", "--output", str(p)]) == 0
    V = load_prices(p).values
    assert np.allclose(np.diff(V, axis=0), 0.25, atol=1e-12)


def test_verify(capsys):
    assert main(["verify", "-v", "--instances", "30"]) == 0
    out = capsys.readouterr().out
    assert "-150.0" in out and "all" in out


def test_verify_detects_corrupted_constant(capsys):
    assert main(["verify", "--instances", "5", "--inject-k-factor", "0.5"]) == 1
    assert "golden K" in capsys.readouterr().err


def test_verify_with_state_file(bars_file):
    assert main(["verify", "--input", str(bars_file), "--instances", "10"]) == 0
