"""End-to-end checks on the bhlab command-line harness."""

import json
import shutil
from pathlib import Path

import pytest

from burgershuxley import cli, config as cfgmod


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SMALL_ENERGY = """
[solver]
dt = 0.01
t_end = 0.2
n_modes = 8

[energy]
n_paths = 16
t_end = 0.2
"""


def test_print_defaults_round_trips(capsys, tmp_path):
    assert cli.main(["print-defaults"]) == 0
    text = capsys.readouterr().out
    cfg = cfgmod.load_config(_write(tmp_path, text))
    assert cfgmod.config_hash(cfg) == cfgmod.config_hash(cfgmod.load_config(None))


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    path = _write(tmp_path, "[model]\nnuu = 2.0\n")
    code = cli.main(["energy", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "nuu" in capsys.readouterr().err


def test_moments_over_cap_names_constraint(tmp_path, capsys):
    path = _write(tmp_path, "[moments]\nepsilon = 1000.0\nn_paths = 4\n")
    code = cli.main(["moments", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err
    assert "epsilon" in err and "<=" in err


def test_multiplicative_noise_refused_for_exit_tail(tmp_path, capsys):
    path = _write(tmp_path, "[noise]\nkind = \"multiplicative\"\n")
    code = cli.main(["exit-tail", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "additive" in capsys.readouterr().err


def test_energy_run_writes_artifacts(tmp_path, capsys):
    path = _write(tmp_path, SMALL_ENERGY)
    out = tmp_path / "runs"
    code = cli.main(["energy", "--config", path, "--out", str(out)])
    assert code == 0
    rundirs = list(out.iterdir())
    assert len(rundirs) == 1
    d = rundirs[0]
    assert (d / "manifest.json").exists()
    assert (d / "summary.csv").exists()
    report = json.loads((d / "energy-bounds.json").read_text())
    assert report["verdict"] == "bound-respected"
    manifest = json.loads((d / "manifest.json").read_text())
    assert manifest["config_hash"].startswith(d.name)
    assert "timestamp" in manifest and "timestamp" not in report


def test_csv_format_skips_per_report_json(tmp_path):
    path = _write(tmp_path, SMALL_ENERGY)
    out = tmp_path / "runs"
    assert cli.main(["energy", "--config", path, "--out", str(out),
                     "--format", "csv"]) == 0
    d = next(out.iterdir())
    assert (d / "summary.csv").exists()
    assert not (d / "energy-bounds.json").exists()


def test_report_json_is_worker_invariant(tmp_path):
    path = _write(tmp_path, SMALL_ENERGY)
    texts = []
    for w in (1, 3):
        out = tmp_path / f"w{w}"
        assert cli.main(["energy", "--config", path, "--out", str(out),
                         "--workers", str(w)]) == 0
        d = next(out.iterdir())
        texts.append((d / "energy-bounds.json").read_text())
    assert texts[0] == texts[1]


def test_simulate_is_bit_identical(tmp_path):
    cfg = _write(tmp_path, "[solver]\ndt = 0.01\nt_end = 0.1\nn_modes = 8\n")
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        d = next(out.iterdir())
        blobs.append((d / "trajectory.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_seed_flag_changes_output(tmp_path):
    cfg = _write(tmp_path, "[solver]\ndt = 0.01\nt_end = 0.1\nn_modes = 8\n")
    blobs = []
    for seed, tag in ((0, "a"), (1, "b")):
        out = tmp_path / tag
        assert cli.main(["simulate", "--config", cfg, "--out", str(out),
                         "--seed", str(seed)]) == 0
        d = next(out.iterdir())
        blobs.append((d / "trajectory.csv").read_bytes())
    assert blobs[0] != blobs[1]