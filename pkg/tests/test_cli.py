import os

import numpy as np
import pytest

from contact_pinn.cli import (EXIT_IO, EXIT_NUMERICAL, EXIT_OK,
                              EXIT_VALIDATION, cli)


def test_list_scenes(capsys):
    assert cli(["list-scenes"]) == EXIT_OK
    out = capsys.readouterr().out.strip().splitlines()
    assert out == ["hertz", "cantilever", "ironing", "ring", "two_rings"]
    assert len(out) == 5


def test_unknown_scene_is_validation_error(capsys):
    assert cli(["run", "--scene", "wedge"]) == EXIT_VALIDATION
    assert "unknown scene" in capsys.readouterr().err


def test_missing_scene_is_validation_error():
    assert cli(["run"]) == EXIT_VALIDATION


def test_bad_override_is_validation_error(capsys):
    code = cli(["run", "--scene", "hertz", "--preset", "smoke",
                "--override", "bogus=1"])
    assert code == EXIT_VALIDATION


def test_missing_config_file_is_io_error(tmp_path):
    assert cli(["run", "--config", str(tmp_path / "nope.ini")]) == EXIT_IO


def test_gradcheck_single_scene(capsys):
    assert cli(["gradcheck", "--scene", "cantilever", "--draws", "3"]) == \
        EXIT_OK
    assert "PASS" in capsys.readouterr().out


def test_run_smoke_deterministic(tmp_path, capsys):
    args = ["run", "--scene", "hertz", "--preset", "smoke", "--seed", "1",
            "--out", str(tmp_path)]
    assert cli(args + ["--deterministic"][:0]) == EXIT_OK
    hist1 = (tmp_path / "hertz_smoke_seed1" / "history.csv").read_bytes()
    assert cli(args) == EXIT_OK
    hist2 = (tmp_path / "hertz_smoke_seed1" / "history.csv").read_bytes()
    assert hist1 == hist2


def test_run_writes_outputs(tmp_path):
    assert cli(["run", "--scene", "cantilever", "--preset", "smoke",
                "--seed", "2", "--out", str(tmp_path)]) == EXIT_OK
    outdir = tmp_path / "cantilever_smoke_seed2"
    assert (outdir / "history.csv").exists()
    assert (outdir / "params_final.txt").exists()
    assert any(f.suffix == ".vtk" for f in outdir.iterdir())
    assert any(f.suffix == ".csv" for f in outdir.iterdir())


def test_env_var_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("CONTACT_PINN_OUT", str(tmp_path / "rooted"))
    assert cli(["run", "--scene", "cantilever", "--preset", "smoke",
                "--seed", "0"]) == EXIT_OK
    assert (tmp_path / "rooted" / "cantilever_smoke_seed0").exists()


def test_config_file_round(tmp_path):
    cfg = tmp_path / "scene.ini"
    cfg.write_text(
        "[scene]\nname = ironing\npreset = smoke\nseed = 4\n"
        "[params]\nkappa = 12.5\n"
        "[body.cyl]\nE = 250.0\n")
    assert cli(["run", "--config", str(cfg), "--out", str(tmp_path)]) == \
        EXIT_OK
    assert (tmp_path / "ironing_smoke_seed4").exists()


def test_config_file_bad_key(tmp_path):
    cfg = tmp_path / "scene.ini"
    cfg.write_text("[scene]\nname = hertz\npreset = smoke\n"
                   "[params]\nwidget = 3\n")
    assert cli(["run", "--config", str(cfg)]) == EXIT_VALIDATION
