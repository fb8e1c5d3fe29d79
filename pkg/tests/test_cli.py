import json

import pytest

from maxwalk.cli import main
from maxwalk.config import ConfigError, RunConfig


def write_config(tmp_path, **overrides):
    data = {
        "specs": ["gaussian"],
        "n_max": 4,
        "n_list": [1, 2, 4],
        "grid_points": 2**12,
        "mc_samples": 10**4,
        "seed": 7,
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(mode="plot")
    with pytest.raises(ConfigError):
        RunConfig(n_list=(0, 1))
    with pytest.raises(ConfigError):
        RunConfig(grid_points=3000)
    with pytest.raises(ConfigError):
        RunConfig(specs=("gaussian", "exotic"))
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"unexpected": 1})
    cfg = RunConfig.from_dict({"specs": ["spike"], "n_list": [4, 2, 2], "n_max": 8})
    assert cfg.n_list == (2, 4)


def test_invalid_config_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, n_list=[0, 1])
    code = main(["curves", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_curves_mode_writes_deterministic_files(tmp_path):
    path = write_config(tmp_path)
    out1 = tmp_path / "out1"
    out2 = tmp_path / "out2"
    assert main(["curves", "--config", str(path), "--out", str(out1)]) == 0
    assert main(["curves", "--config", str(path), "--out", str(out2)]) == 0
    for name in ("curves_gaussian.csv", "entropy_gaussian.csv", "walk_gaussian.csv"):
        a = (out1 / name).read_bytes()
        b = (out2 / name).read_bytes()
        assert a == b and len(a) > 0
    header = (out1 / "curves_gaussian.csv").read_text().splitlines()[0]
    assert header == "n,D,D_plus,tv,m2_plus,Fbar0,tail4,alesh,local_a"


def test_density_and_decomp_modes(tmp_path):
    path = write_config(tmp_path, specs=["spike"])
    out = tmp_path / "out"
    assert main(["density", "--config", str(path), "--out", str(out)]) == 0
    assert (out / "max_density_spike_n4.csv").exists()
    assert (out / "max_density_spike_n4_rescaled.csv").exists()
    assert main(["decomp", "--config", str(path), "--out", str(out)]) == 0
    text = (out / "decomp_spike.csv").read_text()
    assert text.splitlines()[0].startswith("n,l1_pq")


def test_montecarlo_and_charfn_modes(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["montecarlo", "--config", str(path), "--out", str(out)]) == 0
    summary = json.loads((out / "mc_gaussian_n4.json").read_text())
    assert summary["samples"] == 10**4
    assert main(["charfn", "--config", str(path), "--out", str(out)]) == 0
    assert (out / "charfn_half_normal.csv").exists()
    windows = (out / "charfn_windows_gaussian.csv").read_text().splitlines()
    assert windows[0] == "decay_window_99,envelope_window"


def test_verify_mode_small_scale(tmp_path, capsys):
    path = write_config(tmp_path, n_max=8, n_list=[1, 2, 4, 8], grid_points=2**13)
    out = tmp_path / "out"
    code = main(["verify", "--config", str(path), "--out", str(out)])
    captured = capsys.readouterr().out
    assert code == 0, captured
    report = json.loads((out / "verify_report.json").read_text())
    assert report["passed"] is True
    assert report["checks"]
    for check in report["checks"]:
        assert {"check_id", "description", "value", "threshold", "passed"} <= set(check)
    assert "[pass]" in captured


def test_flag_overrides(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "out"
    code = main([
        "montecarlo", "--config", str(path), "--spec", "uniform",
        "--seed", "99", "--out", str(out),
    ])
    assert code == 0
    assert (out / "mc_uniform_n4.json").exists()
    assert json.loads((out / "mc_uniform_n4.json").read_text())["seed"] == 99
