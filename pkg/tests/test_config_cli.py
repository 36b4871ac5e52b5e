import json
from pathlib import Path

import pytest

from polymerlab.cli import main
from polymerlab.config import ConfigError, DEFAULT_CONFIG, load_config


def write_config(tmp_path: Path, **overrides) -> str:
    doc = {"M": 100, "R": 10, "n_grid": [4, 9], "alphas": [0.8], "seed": 77}
    doc.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_defaults_validate():
    cfg = load_config(None)
    assert cfg.seed == DEFAULT_CONFIG["seed"]
    assert cfg.kernel.normalize_unit_variance
    assert cfg.n_grid == (4, 9, 16, 25)
    assert cfg.env_seeds(3) == [cfg.seed, cfg.seed + 1, cfg.seed + 2]


def test_config_validation_messages(tmp_path):
    with pytest.raises(ConfigError, match="kernel.lambda"):
        load_config(write_config(tmp_path, kernel={"lambda": -1.0}))
    with pytest.raises(ConfigError, match="n_grid"):
        load_config(write_config(tmp_path, n_grid=[9, 4]))
    with pytest.raises(ConfigError, match="nu"):
        load_config(write_config(tmp_path, nu=0.3))
    with pytest.raises(ConfigError, match="unknown config field"):
        load_config(write_config(tmp_path, bogus=1))
    with pytest.raises(ConfigError, match="M must"):
        load_config(write_config(tmp_path, M=1))
    with pytest.raises(ConfigError, match="backend.h"):
        load_config(write_config(tmp_path, backend={"h": -0.5}))


def test_env_check_exit_zero_and_schema(tmp_path):
    cfg = write_config(tmp_path, output_dir=str(tmp_path / "out"))
    assert main(["env-check", "--config", cfg]) == 0
    header = (tmp_path / "out" / "env_check.csv").read_text().splitlines()[0]
    assert header == "position_a,position_b,target_cov,empirical_cov,z"
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["outputs"] == ["env_check.csv"]
    assert (tmp_path / "out" / "env_check.csv").stat().st_size > 0


def test_cli_error_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["env-check", "--config", str(bad)]) == 2

    lam = write_config(tmp_path, kernel={"lambda": -2.0})
    assert main(["env-check", "--config", lam]) == 2

    assert main(["verify", "nosuchsuite", "--config", write_config(tmp_path)]) == 2
    assert main(["env-check", "--config", str(tmp_path / "missing.json")]) == 2


def test_meancontrol_alpha_precondition_exit_two(tmp_path):
    cfg = write_config(tmp_path, alphas=[0.4], output_dir=str(tmp_path / "o"))
    assert main(["verify", "meancontrol", "--config", cfg]) == 2


def test_girsanov_beta_zero_exact_rows(tmp_path):
    cfg = write_config(tmp_path, beta=0.0, M=400, R=20, output_dir=str(tmp_path / "g"))
    assert main(["verify", "girsanov", "--config", cfg]) == 0
    rows = (tmp_path / "g" / "verify_girsanov.csv").read_text().splitlines()
    assert len(rows) == 3
    for row in rows[1:]:
        assert row.endswith("true")


def test_xi_scan_and_manifest(tmp_path):
    out = tmp_path / "scan"
    cfg = write_config(tmp_path, beta=0.0, M=200, R=6, output_dir=str(out))
    assert main(["xi-scan", "--config", cfg]) == 0
    lines = (out / "xi_scan.csv").read_text().splitlines()
    assert lines[0] == "n,alpha,event,mass_mean,mass_stderr,R,M,seed"
    # two events x two n values x one alpha
    assert len(lines) == 1 + 4
    manifest = json.loads((out / "manifest.json").read_text())
    for name in manifest["outputs"]:
        target = out / name
        assert target.exists() and target.stat().st_size > 0


def test_fluct_fit_outputs(tmp_path):
    out = tmp_path / "fit"
    cfg = write_config(tmp_path, beta=0.0, M=200, R=6, n_grid=[4, 9, 16, 25], output_dir=str(out))
    assert main(["fluct-fit", "--config", cfg]) == 0
    doc = json.loads((out / "fluct_fit.json").read_text())
    assert set(doc) >= {"xi_hat", "ci_low", "ci_high", "n_grid", "beta", "lambda", "d"}
    spreads = (out / "fluct_fit_spreads.csv").read_text().splitlines()
    assert spreads[0].startswith("quantity,n,beta,alpha_or_na,value")
    assert len(spreads) == 1 + 4


def test_seed_flag_overrides_config(tmp_path):
    out = tmp_path / "s"
    cfg = write_config(tmp_path, beta=0.0, M=200, R=6, output_dir=str(out))
    assert main(["xi-scan", "--config", cfg, "--seed", "999"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 999
    first = (out / "xi_scan.csv").read_text()
    assert ",999" in first.splitlines()[1]


def test_threads_env_fallback(tmp_path, monkeypatch):
    out = tmp_path / "t"
    cfg = write_config(tmp_path, beta=0.0, M=100, R=4, output_dir=str(out))
    monkeypatch.setenv("POLYMERLAB_THREADS", "3")
    assert main(["xi-scan", "--config", cfg]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["threads"] == 3
    monkeypatch.setenv("POLYMERLAB_THREADS", "soup")
    assert main(["xi-scan", "--config", cfg]) == 2


def test_rerun_is_byte_identical_across_threads(tmp_path):
    cfg = write_config(tmp_path, beta=0.5, M=150, R=8)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["xi-scan", "--config", cfg, "--out", str(out1), "--threads", "1"]) == 0
    assert main(["xi-scan", "--config", cfg, "--out", str(out2), "--threads", "2"]) == 0
    assert (out1 / "xi_scan.csv").read_bytes() == (out2 / "xi_scan.csv").read_bytes()
