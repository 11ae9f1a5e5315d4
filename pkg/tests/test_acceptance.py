"""End-to-end acceptance checks; a PASS/FAIL line per criterion is printed in the summary."""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, SMALL_MESHES, cached_mesh, cached_solve, cached_system, \
    dense_pairs, m_angle
from nodalsym import eigensolve as es, experiments as ex, geometry as geo
from nodalsym.fem import pairing_matrix
from nodalsym.nodal import count_nodal_domains, courant_check
from nodalsym.oracles import bessel_deriv_zero, rectangle_spectrum
from nodalsym.symmetry import classify, principle_verdict

WHEELS = ("wheel", "half_wheel_x", "half_wheel_y")


def record(n: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (name, bool(ok), detail)
    assert ok, detail


def builtin_h(name: str) -> float:
    return 0.1 / 3 if name in WHEELS else 0.05


@pytest.fixture(scope="module")
def disk_table():
    start = time.perf_counter()
    table = ex.run_disk_table(1.0, 0.02, 6, refine=1)
    return table, time.perf_counter() - start


def test_criterion_1_disk_spectrum(disk_table):
    table, seconds = disk_table
    mu2 = bessel_deriv_zero(1, 1) ** 2
    mu6 = bessel_deriv_zero(0, 2) ** 2
    e2 = abs(table.rows[1].mu - mu2) / mu2
    e6 = abs(table.rows[5].mu - mu6) / mu6
    record(1, "disk spectrum accuracy", e2 <= 0.01 and e6 <= 0.015 and seconds <= 120,
           f"mu2 err {e2:.2e}, mu6 err {e6:.2e}, {seconds:.1f}s, {table.solved.eigen.n_dof} dof")


def test_criterion_2_disk_parity_and_nodal_table(disk_table):
    table, _ = disk_table
    parities, counts = table.parities(), table.nodal_counts()
    inner = table.rows[5].interior_domains
    ok = parities == ["Odd", "Odd", "Even", "Even", "Even"] and counts == [2, 2, 4, 4, 2] \
        and inner == 1
    record(2, "disk parity/nodal table", ok,
           f"parities {parities}, counts {counts}, mu6 interior domains {inner}")


def test_criterion_3_rectangle_and_square():
    h = 0.05
    r = cached_solve("rectangle", h, 4)
    m, _, M = cached_system("rectangle", h)
    exact = rectangle_spectrum(2.0, 1.0, 2)[1].mu
    err = abs(r.eigenvalues[1] - exact) / exact
    verdict = classify(r.eigenvectors[:, 1], M, m).verdict
    count = count_nodal_domains(m, r.eigenvectors[:, 1]).count
    sq = cached_solve("square", h, 5)
    ms, _, Ms = cached_system("square", h)
    rep = principle_verdict(sq, Ms, ms, es.discretization_gap(h))
    split = (rep.even_dim, rep.odd_dim)
    ok = err <= 0.01 and str(verdict) == "Odd" and count == 2 and len(rep.indices) == 2 \
        and split == (0, 2)
    record(3, "rectangle and square", ok,
           f"rect mu2 err {err:.2e} {verdict} nodal {count}; square cluster "
           f"{len(rep.indices)} split {split}")


def test_criterion_4_principle_holds_on_dumbbell_and_annulus():
    rows = ex.run_principle_census({"dumbbell": geo.BUILTINS["dumbbell"],
                                    "annulus": geo.BUILTINS["annulus"]})
    by_name = {r.name: r for r in rows}
    ok = all(r.verdict == "HOLDS" for r in rows) and by_name["annulus"].ring == "TransversalCut"
    record(4, "principle holds on dumbbell and annulus", ok,
           ", ".join(f"{r.name} {r.verdict} ({r.even_dim},{r.odd_dim}) {r.ring}".strip()
                     for r in rows))


def test_criterion_5_wheel_sweep():
    start = time.perf_counter()
    res = ex.run_epsilon_sweep(1.0, 2.0, 3.0)
    seconds = time.perf_counter() - start
    c = res.checks
    wanted = ("all_rows_solved", "even_phase_found", "mu2_below_step1_bound",
              "mu2_increases_with_eps_in_even_phase", "nu_right_plateau", "nu_upper_plateau")
    failed = [k for k in wanted if not c[k]]
    record(5, "wheel counterexample sweep", not failed and seconds <= 900,
           f"eps* {res.eps_star}, {seconds:.0f}s, failed {failed or 'none'}")


def test_criterion_6_courant_bound():
    bad = []
    for name in geo.BUILTINS:
        h = builtin_h(name)
        r = cached_solve(name, h, 10)
        rows = courant_check(r, cached_mesh(name, h), es.discretization_gap(h))
        bad += [(name, row.position, row.count) for row in rows if not row.ok]
    record(6, "Courant bound", not bad,
           f"{10 * len(geo.BUILTINS)} modes on {len(geo.BUILTINS)} domains, violations {bad}")


def test_criterion_7_oracle_equivalence():
    worst_val = worst_vec = 0.0
    k = 8
    for name, h in SMALL_MESHES:
        m, K, M = cached_system(name, h)
        assert m.n_vertices <= 300
        r = es.smallest_pairs(K, M, k, 1e-11)
        w, X = dense_pairs(K, M)
        rel = np.abs(r.eigenvalues - w[:k]) / np.maximum(np.abs(w[:k]), 1.0)
        worst_val = max(worst_val, rel.max())
        for g in es.cluster(w, 1e-6):
            idx = [i for i in g if i < k]
            if idx:
                worst_vec = max(worst_vec, m_angle(X[:, list(g)], r.eigenvectors[:, idx], M))
    record(7, "sparse vs dense oracle", worst_val <= 1e-8 and worst_vec <= 1e-6,
           f"{len(SMALL_MESHES)} meshes, max rel eig err {worst_val:.1e}, "
           f"max angle {worst_vec:.1e}")


def test_criterion_8_exactness():
    worst = {"K1": 0.0, "mass": 0.0, "pairing": 0.0}
    for name in geo.BUILTINS:
        m, K, M = cached_system(name, builtin_h(name))
        worst["K1"] = max(worst["K1"], np.abs(K @ np.ones(m.n_vertices)).max())
        mesh_area = m.signed_areas.sum()
        worst["mass"] = max(worst["mass"], abs(M.sum() - mesh_area) / mesh_area)
        if isinstance(m.domain, geo.Rectangle):  # polygonal: the mesh covers the domain exactly
            worst["mass"] = max(worst["mass"], abs(M.sum() - m.domain.area()) / m.domain.area())
        if m.pairing is not None:
            P = pairing_matrix(m.pairing)
            worst["pairing"] = max(worst["pairing"], abs(P.T @ K @ P - K).max(),
                                   abs(P.T @ M @ P - M).max())
    ok = worst["K1"] <= 1e-12 and worst["mass"] <= 1e-10 and worst["pairing"] <= 1e-12
    record(8, "exactness checks", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
