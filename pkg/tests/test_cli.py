import json
import subprocess
import sys

import pytest

from mdimlab.cli import COMMANDS, build_parser, main


def run(*args):
    return subprocess.run([sys.executable, "-m", "mdimlab", *args], capture_output=True, text=True, timeout=120)


def test_help_lists_every_subcommand():
    r = run("--help")
    assert r.returncode == 0
    for name in COMMANDS:
        assert name in r.stdout


def test_cover_prints_counts(capsys):
    assert main(["cover", "--system", "rotation:1,8", "--eps", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "experiment: cover" in out
    assert "counts: [[0.5, 1, 1]]" in out


def test_missing_measure_and_unknown_command_exit_2(capsys):
    assert main(["rd-curve"]) == 2
    assert "measures" in capsys.readouterr().err
    assert run("frobnicate").returncode == 2
    assert main([]) == 2


def test_units_flag_converts_summary(capsys):
    main(["--units", "bits", "entropy", "--measure", "bernoulli:0.5,0.5", "--n-max", "3"])
    out = capsys.readouterr().out
    assert "units: bits" in out


def test_config_file_and_out_dir(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "growth", "system": "full_shift:2,1,4", "eps": 0.6,
                               "n_range": [1, 4]}))
    out = tmp_path / "out"
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "summary.json").exists()
    assert (out / "report.txt").read_text().startswith("# generated ")
    assert "artifacts:" in capsys.readouterr().out


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "cover", "system": "rotation:1,8", "eps": 0.5}))
    assert main(["--config", str(cfg), "cover", "--eps", "0.2"]) == 0
    assert "[[0.2, 4, 4]]" in capsys.readouterr().out


def test_list_flags_parse():
    args = build_parser().parse_args(["mdim", "--eps-grid", "0.5", "0.25", "--n-range", "1", "4"])
    assert args.eps_grid == [0.5, 0.25] and args.n_range == [1, 4]
    args = build_parser().parse_args(["brin-katok", "--measure", "a", "--measure", "b", "--seed", "3"])
    assert args.measures == ["a", "b"] and args.seeds == 3


def test_bad_config_file_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("--config", str(bad)).returncode == 2
