from __future__ import annotations

import functools

import numpy as np
import pytest
import scipy.linalg as la

from nodalsym import fem, geometry as geo, mesh as meshing
from nodalsym.eigensolve import solve_mesh

# Meshes with at most 300 vertices, used for brute-force comparisons.
SMALL_MESHES = [
    ("disk", 0.15), ("disk", 0.25),
    ("rectangle", 0.2), ("rectangle", 0.3),
    ("square", 0.15), ("square", 0.25),
    ("annulus", 0.25), ("annulus", 0.3),
    ("dumbbell", 0.4),
]


@functools.lru_cache(maxsize=None)
def cached_mesh(name: str, h: float, refine: int = 0) -> meshing.Mesh:
    m = meshing.generate(geo.BUILTINS[name], h)
    for _ in range(refine):
        m = meshing.refine(m)
    return m


@functools.lru_cache(maxsize=None)
def cached_system(name: str, h: float, refine: int = 0):
    m = cached_mesh(name, h, refine)
    K, M = fem.assemble(m)
    return m, K, M


@functools.lru_cache(maxsize=None)
def cached_solve(name: str, h: float, k: int, tol: float = 1e-9, refine: int = 0):
    return solve_mesh(cached_mesh(name, h, refine), k, tol)


def dense_pairs(K, M):
    """Brute-force oracle: every eigenpair of the dense pencil."""
    return la.eigh(K.toarray(), M.toarray())


def m_angle(A: np.ndarray, B: np.ndarray, M) -> float:
    """Largest principal angle between two M-orthonormal bases (as a sine)."""
    C = A.T @ (M @ B)
    R = B - A @ C
    return float(np.sqrt(max(0.0, np.max(np.linalg.eigvalsh(R.T @ (M @ R))))))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {name}  [{detail}]")
