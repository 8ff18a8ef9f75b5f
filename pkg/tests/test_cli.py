import argparse
import json

import pytest

from treewire import cli
from treewire.tree import load_edge_list


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path))
    return tmp_path


def test_parse_n_forms():
    assert cli.parse_n_values("4,5,6,7") == [4, 5, 6, 7]
    assert cli.parse_n_values("10,20,...,60") == [10, 20, 30, 40, 50, 60]
    assert cli.parse_n_values("7") == [7]
    grid = cli.parse_n_values("log:10:1000:5")
    assert grid == [10, 32, 100, 316, 1000]


@pytest.mark.parametrize("bad", ["a,b", "10,...,20", "10,5,...,1", "log:1:2"])
def test_parse_n_rejects(bad):
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_n_values(bad)


def test_parse_count():
    assert cli.parse_count("1e7") == 10_000_000
    assert cli.parse_count("250") == 250
    for bad in ("1.5", "-3", "inf", "x"):
        with pytest.raises(argparse.ArgumentTypeError):
            cli.parse_count(bad)


def test_exact_command(out_root, capsys):
    assert cli.main(["exact", "--n", "7"]) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "Line\t" in text and "1616/343" in text
    results = json.loads((out_root / "exact-n7" / "results.json").read_text())
    assert results["rows"][4]["class"] == "Star" and results["rows"][4]["pi"] == "1/2401"


def test_check_command(out_root, capsys):
    assert cli.main(["check", "--n", "5"]) == cli.EXIT_OK
    assert "[PASS] aperiodic" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["exact", "--n", "12"], ["check", "--n", "7"],
                                  ["exact", "--n", "4,5"], ["dist", "--n", "5", "--sweeps", "0"],
                                  ["diam", "--n", "9,5"]])
def test_usage_errors_exit_2(out_root, argv, capsys):
    assert cli.main(argv) == cli.EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_2(out_root):
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["dist", "--n", "5", "--sweeps", "1.5"])
    assert info.value.code == 2


def test_dist_statistical_failure_exit_1(out_root):
    argv = ["dist", "--n", "5", "--sweeps", "2000", "--replicas", "4", "--bootstrap", "200",
            "--thermalization", "100", "--z-max", "0"]
    assert cli.main(argv) == cli.EXIT_FAILED
    assert (out_root / "dist-n5-seed42" / "results.json").exists()


def test_dist_small_run_passes(out_root, capsys):
    argv = ["dist", "--n", "4", "--sweeps", "2e4", "--replicas", "8", "--bootstrap", "1e3"]
    assert cli.main(argv) == cli.EXIT_OK
    assert "P(lower)=" in capsys.readouterr().out


def test_dump_and_load_tree_and_analyze(out_root, tmp_path, capsys):
    tree_file = tmp_path / "final.txt"
    out = tmp_path / "tau-run"
    argv = ["tau", "--n", "30", "--sweeps", "3000", "--thermalization", "100",
            "--dump-tree", str(tree_file), "--save-series", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    with open(tree_file) as fp:
        assert load_edge_list(fp).n == 30
    argv = ["diam", "--n", "30", "--sweeps", "2000", "--thermalization", "0",
            "--load-tree", str(tree_file), "--bin-size", "100", "--bootstrap", "200"]
    assert cli.main(argv) == cli.EXIT_OK
    capsys.readouterr()
    assert cli.main(["analyze", str(out / "series" / "n30-r0.csv"), "--bin-size", "100"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["samples"] == 3000 and summary["tau_int"] > 0.5


def test_tau_exclude_outliers_flag(out_root):
    argv = ["tau", "--n", "10,15,...,35", "--sweeps", "4000", "--thermalization", "200",
            "--exclude-outliers", "10", "--exponent-band", "0,3", "--reduced-chi2-band", "0,100"]
    assert cli.main(argv) == cli.EXIT_OK
    results = json.loads((out_root / "tau-n10-35-seed42" / "results.json").read_text())
    assert results["fit_points"] == [15, 20, 25, 30, 35]


def test_paper_scale_preset_and_defaults():
    parser = cli.build_parser()
    m = cli.manifest_from_args(parser.parse_args(["dist", "--n", "7", "--paper-scale"]))
    assert (m.sweeps, m.replicas, m.bootstrap) == (10**7, 100, 10**6)
    m = cli.manifest_from_args(parser.parse_args(["dist", "--n", "7"]))
    assert (m.sweeps, m.replicas, m.bootstrap, m.thermalization) == (10**5, 20, 10**4, None)
    m = cli.manifest_from_args(parser.parse_args(["diam", "--n", "700,800", "--paper-scale"]))
    assert m.fit_min == 700 and m.sweeps == 10**6 and m.thermalization == 10**5
    m = cli.manifest_from_args(parser.parse_args(["diam", "--n", "7", "--fit-min", "3"]))
    assert m.fit_min == 3 and m.exponent_band == cli.DIAMETER_EXPONENT_BAND
    m = cli.manifest_from_args(parser.parse_args(["tau", "--n", "7", "--sweeps", "1e6"]))
    assert m.sweeps == 10**6 and m.exponent_band == cli.TAU_EXPONENT_BAND


def test_checkpoint_flag(out_root, tmp_path):
    out = tmp_path / "ck"
    argv = ["diam", "--n", "8", "--sweeps", "1000", "--thermalization", "100",
            "--checkpoint-every", "200", "--bin-size", "100", "--bootstrap", "100",
            "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    assert (out / "checkpoints" / "n8-r0.json").exists()
