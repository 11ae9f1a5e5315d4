"""P1 stiffness/mass assembly and Dirichlet elimination."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .mesh import Mesh


class DegenerateElement(ValueError):
    pass


class AllConstrained(ValueError):
    pass


def element_matrices(p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stiffness and consistent mass for triangles ``p`` of shape (m, 3, 2).

    Stiffness uses the edge form ``K_ij = d_i . d_j / (4|T|)`` where ``d_i``
    is the edge opposite vertex ``i``. Also returns the signed areas.
    """
    d = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * (d[:, 2, 0] * (-d[:, 1, 1]) - d[:, 2, 1] * (-d[:, 1, 0]))
    with np.errstate(divide="ignore", invalid="ignore"):  # degenerate areas are caught by callers
        Ke = np.einsum("mik,mjk->mij", d, d) / (4.0 * area)[:, None, None]
    Me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    return Ke, Me, area


def assemble(mesh: Mesh, lump: bool = False) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Neumann stiffness ``K`` and mass ``M`` on all mesh vertices.

    Natural (Neumann) boundary data need no boundary terms. With
    ``lump=True`` the mass matrix is replaced by its row sums.
    """
    T = mesh.triangles
    Ke, Me, area = element_matrices(mesh.vertices[T])
    bad = np.flatnonzero(area < 1e-14)
    if len(bad):
        raise DegenerateElement(f"{len(bad)} triangles with area < 1e-14 (first: {bad[0]})")
    n = mesh.n_vertices
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(n, n))
    M = sp.csr_matrix((Me.ravel(), (rows, cols)), shape=(n, n))
    if lump:
        M = sp.diags(np.asarray(M.sum(axis=1)).ravel()).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    return K, M


@dataclass(frozen=True)
class ReducedSystem:
    K: sp.csr_matrix
    M: sp.csr_matrix
    free: np.ndarray
    constrained: np.ndarray
    n_full: int

    def expand(self, V: np.ndarray) -> np.ndarray:
        """Zero-fill reduced vectors (columns) back to all vertices."""
        V = np.asarray(V)
        out = np.zeros((self.n_full,) + V.shape[1:], dtype=V.dtype)
        out[self.free] = V
        return out


def dirichlet_reduce(K, M, mesh: Mesh) -> ReducedSystem:
    """Eliminate the rows/columns of Dirichlet vertices."""
    n = K.shape[0]
    constrained = mesh.dirichlet_vertices
    free = np.setdiff1d(np.arange(n), constrained)
    if len(free) == 0:
        raise AllConstrained("every vertex carries a Dirichlet condition")
    if len(constrained) == 0:
        return ReducedSystem(K, M, free, constrained, n)
    return ReducedSystem(K[free][:, free].tocsr(), M[free][:, free].tocsr(), free, constrained, n)


def pairing_matrix(pairing: np.ndarray) -> sp.csr_matrix:
    """Permutation ``P`` with ``(P v)_i = v_{sigma(i)}``."""
    n = len(pairing)
    return sp.csr_matrix((np.ones(n), (np.arange(n), pairing)), shape=(n, n))


def write_matrix_market(path, A, comment: str = "") -> Path:
    """Coordinate MatrixMarket file; symmetric matrices store one triangle."""
    path = Path(path)
    if path.suffix != ".mtx":
        path = path.with_name(path.name + ".mtx")
    path.parent.mkdir(parents=True, exist_ok=True)
    A = sp.coo_matrix(A)
    sym = "symmetric" if abs(A - A.T).max() == 0 else "general"
    scipy.io.mmwrite(str(path), A, comment=comment, field="real", symmetry=sym)
    return path
