from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group

from conftest import cached_mesh, cached_solve, cached_system
from nodalsym import symmetry as sym
from nodalsym.eigensolve import cluster, discretization_gap
from nodalsym.fem import pairing_matrix


def _m_normalize(v, M):
    return v / np.sqrt(v @ (M @ v))


def test_constant_vector_is_even():
    m, _, M = cached_system("disk", 0.1)
    assert sym.parity_score(np.ones(m.n_vertices), M, m) == pytest.approx(1.0, abs=1e-14)


def test_odd_linear_function():
    m, _, M = cached_system("disk", 0.1)
    x = m.vertices[:, 0]
    assert sym.parity_score(x, M, m) == pytest.approx(-1.0, abs=1e-14)
    assert sym.classify(x, M, m).verdict is sym.Verdict.ODD


def test_equal_even_and_odd_parts_score_zero(rng):
    m, _, M = cached_system("annulus", 0.1)
    x = rng.standard_normal(m.n_vertices)
    Px = x[m.pairing]
    even = _m_normalize(0.5 * (x + Px), M)
    odd = _m_normalize(0.5 * (x - Px), M)
    assert abs(sym.parity_score(even + odd, M, m)) <= 1e-12
    assert sym.classify(even + odd, M, m).verdict is sym.Verdict.MIXED


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3))
def test_score_properties(seed, scale):
    m, _, M = cached_system("square", 0.15)
    v = np.random.default_rng(seed).standard_normal(m.n_vertices)
    s = sym.parity_score(v, M, m)
    assert -1 - 1e-12 <= s <= 1 + 1e-12
    assert sym.parity_score(scale * v, M, m) == pytest.approx(s, abs=1e-12)
    assert sym.parity_score(v[m.pairing], M, m) == pytest.approx(s, abs=1e-12)


def test_classification_thresholds():
    assert sym.classify_score(1 - 1e-3) is sym.Verdict.EVEN
    assert sym.classify_score(-(1 - 1e-3)) is sym.Verdict.ODD
    assert sym.classify_score(0.99) is sym.Verdict.MIXED
    assert str(sym.Verdict.MIXED) == "Mixed"


def test_projectors():
    m = cached_mesh("dumbbell", 0.2)
    Pe, Po = sym.projectors(m)
    P = pairing_matrix(m.pairing)
    eye = np.eye(m.n_vertices)
    assert np.allclose((Pe @ Pe).toarray(), Pe.toarray())
    assert np.allclose((Po @ Po).toarray(), Po.toarray())
    assert np.allclose((Pe + Po).toarray(), eye)
    assert abs(Pe @ Po).max() == 0
    assert abs(P @ P - eye).max() == 0


def _disk_clusters():
    r = cached_solve("disk", 0.05, 7)
    return r, cluster(r.eigenvalues, discretization_gap(0.05))


def test_disk_cluster_splits():
    r, groups = _disk_clusters()
    m, _, M = cached_system("disk", 0.05)
    splits = [sym.split_eigenspace(r.eigenvectors[:, g], M, m) for g in groups[:4]]
    assert splits == [(1, 0), (0, 2), (2, 0), (1, 0)]


def test_split_is_basis_independent():
    r, groups = _disk_clusters()
    m, _, M = cached_system("disk", 0.05)
    V = r.eigenvectors[:, groups[1]]
    Q = ortho_group.rvs(2, random_state=5)
    assert sym.split_eigenspace(V @ Q, M, m) == (0, 2)


def test_align_parity_separates_even_and_odd():
    r = cached_solve("square", 0.05, 6)
    m, _, M = cached_system("square", 0.05)
    idx = cluster(r.eigenvalues, discretization_gap(0.05))[1]
    Q = ortho_group.rvs(len(idx), random_state=1)
    V, w = sym.align_parity(r.eigenvectors[:, idx] @ Q, M, m)
    assert np.allclose(w, -1.0, atol=1e-6)
    for col in V.T:
        assert sym.classify(col, M, m).verdict is sym.Verdict.ODD


def test_indefinite_split_for_joined_clusters():
    r, groups = _disk_clusters()
    m, _, M = cached_system("disk", 0.05)
    joined = r.eigenvectors[:, [0, 1]]
    # the mixed basis spans the same invariant plane, but one mixed column alone does not
    mixed = joined @ np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    assert sym.split_eigenspace(mixed, M, m) == (1, 1)
    with pytest.raises(sym.IndefiniteSplit):
        sym.split_eigenspace(mixed[:, :1], M, m)


def test_missing_pairing():
    m = cached_mesh("disk", 0.2)
    with pytest.raises(sym.NoPairing):
        sym.parity_score(np.ones(m.n_vertices), 1.0, replace(m, pairing=None))


@pytest.mark.parametrize("name,h,expected,split", [
    ("disk", 0.05, sym.Principle.HOLDS, (0, 2)),
    ("rectangle", 0.05, sym.Principle.HOLDS, (0, 1)),
    ("dumbbell", 0.1, sym.Principle.HOLDS, (0, 1)),
    ("annulus", 0.1, sym.Principle.HOLDS, (0, 2)),
])
def test_principle_verdicts(name, h, expected, split):
    r = cached_solve(name, h, 8)
    m, _, M = cached_system(name, h)
    rep = sym.principle_verdict(r, M, m, discretization_gap(h))
    assert rep.verdict is expected
    assert (rep.even_dim, rep.odd_dim) == split
    assert rep.space_parity is sym.Verdict.ODD


def test_wheel_principle_fails():
    r = cached_solve("wheel", 0.033, 6)
    m, _, M = cached_system("wheel", 0.033)
    rep = sym.principle_verdict(r, M, m, discretization_gap(0.033))
    assert rep.verdict is sym.Principle.FAILS
    assert (rep.even_dim, rep.odd_dim) == (1, 0)


def test_second_cluster_needs_room():
    r = cached_solve("disk", 0.1, 3)
    with pytest.raises(ValueError):
        sym.second_cluster(r, discretization_gap(0.1))
