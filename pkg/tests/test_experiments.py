import csv
import json
import math

import numpy as np
import pytest

from nodalsym import experiments as ex, geometry as geo, mesh as meshing


def coarse(r1, eps):
    return min(0.08, r1 * eps / 3)


def test_mode_table_and_outputs(tmp_path):
    solved = ex.solve_domain(geo.Disk(1.0), 0.08, 6)
    rows, V = ex.mode_table(solved)
    assert [r.eigen_index for r in rows] == list(range(1, 7))
    assert rows[0].verdict == "Even" and rows[0].nodal_count == 1
    assert V.shape == solved.eigen.eigenvectors.shape
    path = ex.write_csv(tmp_path / "eigs.csv", rows)
    with open(path) as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 6 and "parity" not in table[0] and "verdict" in table[0]
    ex.write_json(tmp_path / "v.json", {"x": np.float64(1.5), "a": np.arange(2)})
    assert json.loads((tmp_path / "v.json").read_text()) == {"x": 1.5, "a": [0, 1]}
    files = ex.write_mode_vtks(tmp_path, solved.mesh, V)
    assert len(files) == 6
    _, _, data = meshing.read_vtk(files[1])
    assert np.allclose(data["eigenfunction"], V[:, 1])


def test_coarse_disk_table(tmp_path):
    table = ex.run_disk_table(1.0, 0.05, 6, refine=0, out=tmp_path)
    assert table.parities() == ["Odd", "Odd", "Even", "Even", "Even"]
    assert table.nodal_counts() == [2, 2, 4, 4, 2]
    assert table.rel_error(2) < 0.01
    assert (tmp_path / "eigs.csv").exists()


def _row(eps, mu2, verdict, right=0.2, upper=0.16):
    return ex.SweepRow(eps, 0.03, 100, mu2, 1, 0.0, verdict,
                       ex.step1_upper_bound(1, 2, 3, eps).value, right, upper, 2, True, 1e-10)


def test_transition_and_checks_on_synthetic_rows():
    rows = [_row(0.4, 0.5, "Odd"), _row(0.2, 0.2, "Mixed"), _row(0.1, 0.138, "Even"),
            _row(0.05, 0.08, "Even")]
    assert ex.transition_eps(rows) == 0.1
    checks = ex.sweep_checks(rows, 0.1)
    assert checks["even_phase_found"]
    assert not checks["odd_above_transition"]  # the Mixed row breaks it
    assert checks["mu2_increases_with_eps_in_even_phase"]
    assert checks["nu_right_plateau"] and checks["nu_upper_plateau"]
    assert ex.transition_eps([_row(0.4, 0.5, "Odd")]) is None


def test_sweep_rejects_bad_eps():
    with pytest.raises(ValueError):
        ex.run_epsilon_sweep(eps_values=(0.1, 0.2))
    with pytest.raises(ValueError):
        ex.run_epsilon_sweep(eps_values=(0.9,))


def test_short_sweep(tmp_path):
    res = ex.run_epsilon_sweep(1, 2, 3, (0.5, 0.1), h_policy=coarse, out=tmp_path)
    big, small = res.rows
    assert big.verdict == "Odd" and small.verdict == "Even"
    assert res.eps_star == 0.1
    assert small.hub_tire and small.bound_ok
    assert small.mu2 < min(small.nu_right, small.nu_upper)
    saved = json.loads((tmp_path / "verdicts.json").read_text())
    assert saved["eps_star"] == 0.1
    assert len(list(csv.DictReader(open(tmp_path / "sweep.csv")))) == 2


def test_census_subset(tmp_path):
    rows = ex.run_principle_census({"disk": geo.Disk(1.0), "annulus": geo.Annulus(1.0, 2.0)},
                                   0.1, out=tmp_path)
    assert [r.name for r in rows] == ["disk", "annulus"]
    assert all(r.ok for r in rows)
    assert rows[1].ring == "TransversalCut"
    assert (tmp_path / "census.csv").exists()


@pytest.mark.parametrize("eps", [0.05, 0.2, 0.6])
def test_step3_pieces_tile_the_half_wheels(eps):
    p = {k: d.area() for k, d in ex.step3_pieces(1, 2, 3, eps).items()}
    right = geo.HalfWheelX(1, 2, 3, eps).area()
    upper = geo.HalfWheelY(1, 2, 3, eps).area()
    assert 2 * p["hub_sector"] + 2 * p["tire_sector"] + p["wedge"] == pytest.approx(right)
    assert p["hub_half"] + p["tire_half"] + 2 * p["passage"] == pytest.approx(upper)


def test_short_step3(tmp_path):
    res = ex.step3_monotonicity(1, 2, 3, (0.3, 0.15), h_policy=coarse, out=tmp_path)
    assert [r.eps for r in res.rows] == [0.3, 0.15]
    assert res.checks["right_half_above_pieces"] and res.checks["upper_half_above_pieces"]
    assert res.checks["passage_nonincreasing_in_eps"]
    row = res.rows[1]
    # Dirichlet on the cut theta = 0 across a width r * eps: scales like eps^-2
    assert (math.pi / 4) ** 2 <= row.passage * row.eps**2 <= (math.pi / 2) ** 2
    assert "passage_change_two_smallest_eps" in res.report
    assert (tmp_path / "step3.csv").exists()
