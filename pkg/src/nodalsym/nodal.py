"""Nodal-domain census of vertex-valued eigenfunctions."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .eigensolve import EigenResult, cluster
from .mesh import Mesh


class AllNeutral(ValueError):
    pass


@dataclass(frozen=True)
class NodalDomain:
    sign: int
    area: float
    n_vertices: int
    touches_boundary: bool
    boundary_loops: frozenset = frozenset()


@dataclass(frozen=True)
class NodalReport:
    domains: tuple[NodalDomain, ...]
    labels: np.ndarray = field(repr=False)  # component id per vertex, -1 for neutral
    neutral_count: int
    zero_tol: float

    @property
    def count(self) -> int:
        return len(self.domains)

    def signs(self) -> list[int]:
        return [d.sign for d in self.domains]


def vertex_signs(v, zero_tol: float = 1e-6) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    scale = np.abs(v).max() if len(v) else 0.0
    if scale == 0.0:
        raise AllNeutral("vector is identically zero")
    s = np.sign(v).astype(int)
    s[np.abs(v) <= zero_tol * scale] = 0
    if not s.any():
        raise AllNeutral("every vertex is below the zero tolerance")
    return s


def saddle_vertices(mesh: Mesh, s: np.ndarray) -> np.ndarray:
    """Signed vertices whose same-sign neighbours form two or more arcs.

    Such a vertex sits on a discrete crossing of nodal lines, where the
    piecewise-linear sign pattern bridges sectors that are separate in the
    continuum (e.g. the centre of a disk mode with four sectors).
    """
    T = mesh.triangles
    centre = T.ravel()
    j = T[:, [1, 2, 0]].ravel()
    k = T[:, [2, 0, 1]].ravel()
    same_link = (s[centre] != 0) & (s[j] == s[centre]) & (s[k] == s[centre])
    e = mesh.edges
    n = mesh.n_vertices
    same_edge = (s[e[:, 0]] == s[e[:, 1]]) & (s[e[:, 0]] != 0)
    nodes = np.bincount(e[same_edge].ravel(), minlength=n)
    links = np.bincount(centre[same_link], minlength=n)
    # the link subgraph is a forest unless it is the entire cycle
    arcs = nodes - links
    return np.flatnonzero(arcs >= 2)


def _components(mesh: Mesh, s: np.ndarray) -> np.ndarray:
    n = mesh.n_vertices
    e = mesh.edges
    e = e[(s[e[:, 0]] == s[e[:, 1]]) & (s[e[:, 0]] != 0)]
    graph = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    return connected_components(graph, directed=False)[1]


def count_nodal_domains(mesh: Mesh, v, zero_tol: float = 1e-6,
                        split_saddles: bool = True, min_vertices: int = 3,
                        min_peak: float = 1e-3) -> NodalReport:
    """Connected components of same-sign vertices along mesh edges.

    Vertices with ``|v_i| <= zero_tol * max|v|`` are neutral and belong to
    no domain; with ``split_saddles`` so are vertices at discrete nodal
    crossings (see ``saddle_vertices``). Components with fewer than
    ``min_vertices`` vertices are below mesh resolution and are neutralized
    too, as are components whose largest ``|v_i|`` stays below
    ``min_peak * max|v|``: that is under the discretization error of a P1
    eigenvector, so their sign is not resolved (this happens where a mode
    tunnels through a narrow channel at amplitude ~1e-6). Domain areas are
    sums of lumped vertex areas.
    """
    s = vertex_signs(v, zero_tol)
    v = np.asarray(v, dtype=float)
    n = mesh.n_vertices
    if split_saddles:
        s[saddle_vertices(mesh, s)] = 0
    comp = _components(mesh, s)
    if min_vertices > 1:
        sizes = np.bincount(comp[s != 0], minlength=n)
        s[(s != 0) & (sizes[comp] < min_vertices)] = 0
    if min_peak > 0:
        peak = np.zeros(n)
        np.maximum.at(peak, comp[s != 0], np.abs(v[s != 0]))
        s[(s != 0) & (peak[comp] < min_peak * np.abs(v).max())] = 0
    if not s.any():
        raise AllNeutral("every vertex is neutral")
    signed = np.flatnonzero(s)
    # relabel components of signed vertices as 0..count-1 in vertex order
    _, first, inverse = np.unique(comp[signed], return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    labels = np.full(n, -1)
    labels[signed] = order[inverse]
    count = len(first)
    area = np.bincount(labels[signed], weights=mesh.vertex_areas[signed], minlength=count)
    size = np.bincount(labels[signed], minlength=count)
    on_bdry = np.zeros(n, dtype=bool)
    on_bdry[mesh.boundary_vertices] = True
    loop_id = mesh.boundary_loop_ids
    domains = []
    for c in range(count):
        members = np.flatnonzero(labels == c)
        loops = frozenset(int(x) for x in np.unique(loop_id[members]) if x >= 0)
        domains.append(NodalDomain(int(s[members[0]]), float(area[c]), int(size[c]),
                                   bool(on_bdry[members].any()), loops))
    return NodalReport(tuple(domains), labels, int((s == 0).sum()), zero_tol)


@dataclass(frozen=True)
class CourantRow:
    index: int  # 1-based eigenvalue index used for the bound
    position: int  # 1-based position in the returned basis
    count: int

    @property
    def ok(self) -> bool:
        return self.count <= self.index


def courant_check(eigen: EigenResult, mesh: Mesh, rel_gap: float = 1e-6,
                  zero_tol: float = 1e-6) -> list[CourantRow]:
    """Nodal count versus index for every returned vector.

    Members of a cluster are compared against the largest index in it.
    """
    rows = []
    for group in cluster(eigen.eigenvalues, rel_gap):
        top = group.stop  # 1-based index of the last member
        for i in group:
            rep = count_nodal_domains(mesh, eigen.eigenvectors[:, i], zero_tol)
            rows.append(CourantRow(top, i + 1, rep.count))
    return rows


class RingVerdict(str, Enum):
    TRANSVERSAL_CUT = "TransversalCut"
    CLOSED_RING = "ClosedRing"
    OTHER = "Other"

    def __str__(self):
        return self.value


def nodal_ring_test(mesh: Mesh, v, zero_tol: float = 1e-6) -> RingVerdict:
    """Topology of a two-domain sign pattern on an annulus-like mesh."""
    if mesh.n_boundary_loops != 2:
        raise ValueError("ring test needs a mesh with exactly two boundary loops")
    rep = count_nodal_domains(mesh, v, zero_tol)
    if rep.count != 2:
        return RingVerdict.OTHER
    touched = [len(d.boundary_loops) for d in rep.domains]
    if touched == [2, 2]:
        return RingVerdict.TRANSVERSAL_CUT
    if touched == [1, 1] and rep.domains[0].boundary_loops != rep.domains[1].boundary_loops:
        return RingVerdict.CLOSED_RING
    return RingVerdict.OTHER


def hub_fraction(mesh: Mesh, report: NodalReport, domain_index: int, radius: float) -> float:
    """Share of a nodal domain's area lying in ``|x| < radius``."""
    members = report.labels == domain_index
    w = mesh.vertex_areas[members]
    inside = np.linalg.norm(mesh.vertices[members], axis=1) < radius
    return float(w[inside].sum() / w.sum())
