import subprocess
import sys

import numpy as np
import pytest

from qugrating.cli import cli_main
from qugrating.gridio import read_csv

ANALYTIC_CFG = """
backend = analytic
scheme = complementary
delta_count = 121
control_kind = rabi-mhz
control_start = 20
control_stop = 60
control_count = 3
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(ANALYTIC_CFG)
    return path


def test_convert_dbm(capsys):
    assert cli_main(["convert", "--dbm", "-31"]) == 0
    out = capsys.readouterr().out
    assert "2.399167 MHz" in out


def test_convert_mhz(capsys):
    assert cli_main(["convert", "--mhz", "2.3991668764178513"]) == 0
    assert "-31.000000 dBm" in capsys.readouterr().out


def test_convert_usage_errors():
    assert cli_main(["convert"]) == 1
    assert cli_main(["convert", "--dbm", "-31", "--mhz", "2.4"]) == 1


def test_unknown_subcommand_exits_one(capsys):
    assert cli_main(["frobnicate"]) == 1


def test_sweep_writes_grid_and_figure(tmp_path, cfg_file, capsys):
    out = tmp_path / "grid.csv"
    rc = cli_main(["sweep", "--config", str(cfg_file), "--out", str(out), "--plot"])
    assert rc == 0
    grid = read_csv(out)
    assert grid.values.shape == (3, 121)
    figure = out.with_suffix(".png")
    assert figure.exists() and figure.stat().st_size > 1000


def test_sweep_rejects_bad_pairing(cfg_file, tmp_path, capsys):
    rc = cli_main(
        [
            "sweep",
            "--config",
            str(cfg_file),
            "--scheme",
            "unmodulated",
            "--out",
            str(tmp_path / "x.csv"),
        ]
    )
    assert rc == 1
    assert "does not support" in capsys.readouterr().err


def test_sweep_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("tau_ns = -5\n")
    rc = cli_main(["sweep", "--config", str(bad), "--out", str(tmp_path / "x.csv")])
    assert rc == 1
    assert "tau_ns" in capsys.readouterr().err


def test_spectrum_single_row(tmp_path, cfg_file):
    out = tmp_path / "row.csv"
    rc = cli_main(
        ["spectrum", "--config", str(cfg_file), "--control", "40", "--out", str(out)]
    )
    assert rc == 0
    grid = read_csv(out)
    assert grid.values.shape == (1, 121)
    assert grid.control[0] == 40.0


def test_compare_identical_files(tmp_path, cfg_file, capsys):
    out = tmp_path / "grid.csv"
    assert cli_main(["sweep", "--config", str(cfg_file), "--out", str(out)]) == 0
    rc = cli_main(["compare", "--a", str(out), "--b", str(out)])
    assert rc == 0
    report = capsys.readouterr().out
    assert "max |a - b|  = 0" in report


def test_compare_axis_mismatch(tmp_path, cfg_file, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert cli_main(["sweep", "--config", str(cfg_file), "--out", str(out_a)]) == 0
    assert (
        cli_main(
            ["spectrum", "--config", str(cfg_file), "--control", "40", "--out", str(out_b)]
        )
        == 0
    )
    assert cli_main(["compare", "--a", str(out_a), "--b", str(out_b)]) == 1


def test_peaks_listing(tmp_path, cfg_file, capsys):
    out = tmp_path / "grid.csv"
    assert cli_main(["sweep", "--config", str(cfg_file), "--out", str(out)]) == 0
    rc = cli_main(["peaks", "--in", str(out), "--row", "1", "--prominence", "0.1"])
    assert rc == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("center")]
    assert len(lines) >= 2
    assert all("fit" in l for l in lines)


def test_peaks_row_out_of_range(tmp_path, cfg_file, capsys):
    out = tmp_path / "grid.csv"
    assert cli_main(["sweep", "--config", str(cfg_file), "--out", str(out)]) == 0
    assert cli_main(["peaks", "--in", str(out), "--row", "7"]) == 1


def test_exit_codes_via_subprocess(tmp_path, cfg_file):
    def run(*args):
        return subprocess.run(
            [sys.executable, "-m", "qugrating", *args],
            capture_output=True,
            text=True,
        )

    good = run("convert", "--dbm", "-31")
    assert good.returncode == 0 and "MHz" in good.stdout
    usage = run("convert")
    assert usage.returncode == 1 and "usage" in usage.stderr.lower()
    out = tmp_path / "g.csv"
    bad_pair = run(
        "sweep", "--config", str(cfg_file), "--scheme", "unmodulated", "--out", str(out)
    )
    assert bad_pair.returncode == 1 and "does not support" in bad_pair.stderr
