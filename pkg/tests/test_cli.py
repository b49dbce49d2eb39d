import json

import pytest

from dispflow.cli import (
    EXIT_BLOWUP,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    ConfigError,
    main,
    parse_config,
    read_config_file,
)


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--output-dir", str(out)])
    return code, out


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nscenario = flow\nn = 64\nt_end = 0.01  # short\n", encoding="utf-8")
    c = parse_config(["--config", str(cfg), "--n", "32"])
    assert c.n == 32 and c.t_end == 0.01 and c.L == 1.0


def test_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        read_config_file(cfg)
    assert info.value.key == "colour"


@pytest.mark.parametrize(
    "args",
    [
        ["--scenario", "dance"],
        ["--target", "torus"],
        ["--n", "15"],
        ["--eps", "-1"],
        ["--dt", "0"],
        ["--k-gauge", "0"],
        ["--n", "abc"],
        ["--scenario", "gauge-probe", "--a", "0"],
        ["--scenario", "gauge-probe", "--a", "1", "--n", "64", "--K-list", "16"],
        ["--scenario", "epsilon-continuation", "--eps-list", "1e-3,1e-2,0"],
        ["--scenario", "epsilon-continuation", "--eps-list", "1e-2,1e-3"],
        ["--preset", "da-rios", "--a", "1"],
    ],
)
def test_config_errors_exit_2(tmp_path, args, capsys):
    code, _ = _run(tmp_path, *args)
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_da_rios_preset_accepted(tmp_path):
    code, out = _run(tmp_path, "--scenario", "flow", "--preset", "da-rios", "--n", "32", "--t-end", "0.01", "--records", "4")
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["target"] == "s2"
    assert manifest["files"] == ["trajectory.csv"]
    assert manifest["exit_code"] == 0


def test_linear_lab_defaults_to_2pi(tmp_path):
    code, out = _run(tmp_path, "--scenario", "linear-lab", "--n", "64", "--t-end", "0.1", "--emit-svg", "true")
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["L"] == pytest.approx(6.283185307179586)
    assert (out / "linear.svg").exists() and (out / "remainders.csv").exists()


def test_reproducible_csv(tmp_path):
    args = ["--scenario", "flow", "--target", "s6", "--n", "32", "--b", "0.5", "--t-end", "0.002", "--seed", "3"]
    _, a = _run(tmp_path, *args, name="a")
    _, b = _run(tmp_path, *args, name="b")
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_snapshot_dump(tmp_path):
    code, out = _run(tmp_path, "--n", "32", "--t-end", "0.001", "--dump-snapshots", "yes")
    assert code == EXIT_OK
    assert (out / "snapshots.bin").read_bytes()[:4] == b"DFLW"


def test_blowup_exit_code(tmp_path):
    code, out = _run(tmp_path, "--target", "flatc", "--n", "32", "--b", "5", "--dt", "1e-2", "--t-end", "1", "--c-cfl", "1e9")
    assert code == EXIT_BLOWUP
    assert (out / "trajectory.csv").exists()


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--n", "32", "--t-end", "0.001", "--output-dir", str(blocker / "sub")]) == EXIT_IO


def test_gauge_probe_scenario(tmp_path):
    code, out = _run(tmp_path, "--scenario", "gauge-probe", "--target", "s2", "--a", "1", "--n", "64", "--K-list", "4,8")
    assert code == EXIT_OK
    header = (out / "probe.csv").read_text().splitlines()[0]
    assert header == "target,K,k_gauge,ungauged_rate,gauged_rate,N_{k+1}"


def test_continuation_scenario(tmp_path):
    code, out = _run(
        tmp_path, "--scenario", "epsilon-continuation", "--n", "32", "--t-end", "0.002", "--eps-list", "1e-2 1e-3 0"
    )
    assert code == EXIT_OK
    lines = (out / "continuation.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[-1].startswith("0.0,0.0,")


def test_invariants_scenario(tmp_path, capsys):
    code, out = _run(tmp_path, "--scenario", "invariants")
    text = capsys.readouterr().out
    assert code == EXIT_OK
    assert "FAIL" not in text and "PASS" in text
    assert (out / "invariants.csv").exists()
