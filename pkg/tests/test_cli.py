import csv
import json
import subprocess
import sys

import pytest

from nodalsym.cli import main


def test_eig_with_figures_and_matrices(tmp_path, capsys):
    code = main(["eig", "--domain", "builtin:square", "--h", "0.1", "--k", "5", "--mtx",
                 "--out", str(tmp_path)])
    assert code == 0
    for name in ("eigs.csv", "verdicts.json", "modes.png", "stiffness.mtx", "mass.mtx",
                 "mode_01.vtk"):
        assert (tmp_path / name).exists(), name
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())
    assert verdicts["principle"]["verdict"] == "HOLDS"
    assert "principle" in capsys.readouterr().out


def test_eig_without_figures(tmp_path):
    assert main(["eig", "--domain", '{"variant": "disk", "radius": 2}', "--h", "0.2",
                 "--out", str(tmp_path), "--no-figures"]) == 0
    assert not (tmp_path / "modes.png").exists()


def test_eig_half_wheel_has_no_principle(tmp_path):
    assert main(["eig", "--domain", "builtin:half_wheel_y", "--h", "0.05", "--k", "2",
                 "--out", str(tmp_path), "--no-figures"]) == 0
    assert "principle" not in json.loads((tmp_path / "verdicts.json").read_text())


def test_invalid_domain_exit_code(tmp_path, capsys):
    assert main(["eig", "--domain", "builtin:nothing", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_disk_table_command(tmp_path, capsys):
    code = main(["disk-table", "--h", "0.05", "--refine", "0", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0, out
    assert out.count("PASS") == 5
    assert (tmp_path / "modes.png").exists()


def test_census_command(tmp_path, capsys):
    code = main(["census", "--domain", "disk", "--domain", "annulus", "--h", "0.1",
                 "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "census.png").exists()
    assert "PASS  annulus" in capsys.readouterr().out


def test_sweep_failure_exit_code(tmp_path, capsys):
    # above the transition only: no even phase, so the sweep must report FAIL
    code = main(["sweep", "--eps", "0.6", "0.5", "--h", "0.08", "--out", str(tmp_path),
                 "--no-figures"])
    assert code == 1
    assert "FAIL  even_phase_found" in capsys.readouterr().out


def test_bessel_zeros_csv(tmp_path):
    path = tmp_path / "z.csv"
    assert main(["bessel-zeros", "--kmax", "2", "--mmax", "2", "--out", str(path)]) == 0
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 6
    assert float(rows[2]["zero"]) == pytest.approx(1.841183781341, abs=1e-11)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nodalsym.cli", "bessel-zeros", "--kmax", "0",
                           "--mmax", "2"], capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[0] == "k,m,zero"
    assert proc.stdout.splitlines()[2].startswith("0,2,3.8317")
