import logging

import numpy as np
import pytest

from curvedblowup import cli
from curvedblowup.config import OUTPUT_ROOT_ENV, ConfigError, RunConfig, load, loads


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    return tmp_path


# -- config ------------------------------------------------------------------


def test_defaults():
    cfg = RunConfig().validate()
    assert cfg["model.nu"] == 0.75
    assert cfg["metric.name"] == "sphere"
    assert cfg.stages[0] == "metric"


def test_round_trip():
    cfg = RunConfig()
    cfg.set("model.nu", "0.6")
    cfg.set("renorm.even", "no")
    again = loads(cfg.dumps())
    assert again.values == cfg.values


@pytest.mark.parametrize("text", [
    "[model]\nnu = 0.7\nspeed = 2\n",
    "[bogus]\nx = 1\n",
    "[model]\nnu = fast\n",
    "[renorm]\neven = maybe\n",
    "not a config",
])
def test_strict_parsing(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_unknown_key_via_set():
    with pytest.raises(ConfigError):
        RunConfig().set("model.speed", "1")


@pytest.mark.parametrize("key,value", [
    ("model.nu", "1.5"), ("model.t0", "-1"), ("evolve.delta", "-0.1"),
    ("model.t_min", "0.5"), ("run.stages", "metric,warp"), ("run.stages", "rate,evolve"),
    ("run.deterministic", "false"),
])
def test_validation_errors(key, value):
    cfg = RunConfig()
    cfg.set(key, value)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_custom_metric_needs_profile():
    cfg = RunConfig()
    cfg.set("metric.name", "custom")
    with pytest.raises(ConfigError):
        cfg.validate()


def test_nu_outside_blowup_range_warns(caplog):
    cfg = RunConfig()
    cfg.set("model.nu", "0.4")
    with caplog.at_level(logging.WARNING):
        cfg.validate()
    assert "outside (1/2, 1]" in caplog.text


def test_missing_upstream_allowed():
    cfg = RunConfig()
    cfg.set("run.stages", "rate")
    assert cfg.validate().stages == ["rate"]


def test_output_root(out_root):
    cfg = RunConfig()
    assert cfg.output_dir == out_root / "out"
    cfg.set("output.directory", "/abs/place")
    assert str(cfg.output_dir) == "/abs/place"


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(str(tmp_path / "nope.ini"))
    assert load(None).values == RunConfig().values


# -- CLI -----------------------------------------------------------------------


def test_metric_check(out_root, capsys):
    code = cli.main(["metric-check", "--out", "m"])
    assert code == cli.EXIT_OK
    text = (out_root / "m" / "summary.txt").read_text()
    assert "curvature_R_rrrr_0" in text
    data = cli.read_csv(out_root / "m" / "metric.csv")
    assert set(data) == {"r", "g_omega", "kappa"}
    assert np.allclose(data["g_omega"], np.sin(data["r"]) ** 2, rtol=1e-12)
    assert "admissibility_C" in capsys.readouterr().out


def test_metric_check_flags_divergent_profile(out_root):
    with pytest.warns(UserWarning):
        code = cli.main(["metric-check", "--out", "c", "--metric", "custom",
                         "--profile", "r**2 + r**3"])
    assert code == cli.EXIT_NUMERICAL


def test_config_error_exit(out_root, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nbogus = 1\n")
    assert cli.main(["metric-check", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert cli.main(["metric-check", "--set", "model.nu"]) == cli.EXIT_CONFIG


def test_rate_fit_without_trace(out_root):
    assert cli.main(["rate-fit", "--out", "empty"]) == cli.EXIT_CONFIG


def test_metric_outputs_byte_identical(out_root):
    cli.main(["metric-check", "--out", "a", "--metric", "hyperbolic"])
    cli.main(["metric-check", "--out", "b", "--metric", "hyperbolic"])
    for name in ("metric.csv", "summary.txt"):
        assert (out_root / "a" / name).read_bytes() == (out_root / "b" / name).read_bytes()


def test_spectral_stage(out_root):
    assert cli.main(["spectral", "--out", "s", "--set", "grid.R_points=601"]) == cli.EXIT_OK
    text = (out_root / "s" / "summary.txt").read_text()
    values = dict(line.split(" = ") for line in text.splitlines() if " = " in line)
    assert float(values["difference"]) < 1e-6
    assert int(values["nodes"]) == 0
    phi = cli.read_csv(out_root / "s" / "eigenfunction.csv")["phi"]
    assert phi.size == 601


def test_evolve_then_rate_fit(out_root):
    args = ["--out", "e", "--no-tune", "--set", "grid.r_points=512",
            "--set", "evolve.t_target=0.05"]
    code = cli.main(["evolve-run"] + args)
    # a coarse grid trips the resolution guard before t0/4, which fails the tracking check
    assert code == cli.EXIT_ACCEPTANCE
    trace = cli.read_csv(out_root / "e" / "trace.csv")
    assert trace["t"][0] == pytest.approx(0.1)
    assert cli.main(["rate-fit", "--out", "e"]) == cli.EXIT_OK
    text = (out_root / "e" / "summary.txt").read_text()
    nu_hat = float([l for l in text.splitlines() if l.startswith("nu_hat")][0].split("=")[1])
    assert nu_hat == pytest.approx(0.75, abs=0.25)


def test_profile_build_flat(out_root):
    code = cli.main(["profile-build", "--out", "p", "--metric", "flat",
                     "--set", "grid.t_nodes=8", "--set", "grid.a_nodes=60"])
    assert code == cli.EXIT_OK
    norms = cli.read_csv(out_root / "p" / "residual_norms.csv")
    assert {"t", "n_e0", "n_e1", "n_e2"} <= set(norms)
    assert np.all(norms["n_e1_interior"] < norms["n_e0_interior"])


def test_csv_round_trip(tmp_path):
    x = np.array([0.1, 1.0 / 3.0, 2.0 ** -40])
    cli.write_csv(tmp_path / "x.csv", ["a", "b"], [x, -x])
    back = cli.read_csv(tmp_path / "x.csv")
    assert np.array_equal(back["a"], x) and np.array_equal(back["b"], -x)
