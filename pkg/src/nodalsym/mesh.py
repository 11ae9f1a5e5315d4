"""Boundary-fitted triangulations with an exact ``x -> -x`` vertex pairing.

Symmetric domains are meshed on the half ``x2 >= 0`` and completed by a
rotation through pi, so the pairing ``sigma`` satisfies
``vertices[sigma[i]] == -vertices[i]`` exactly. Triangulation itself is
delegated to Shewchuk's Triangle (``triangle`` package); boundary nodes
are placed by us so the symmetry cut never receives extra points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import triangle

from .geometry import CUT, DIRICHLET, NEUMANN, BoundarySegment, Domain, Sector, line

MIN_ANGLE = 20.0  # degrees; the mesh contract
_TRIANGLE_ANGLE = 25.0
# Triangle's max-area switch is scaled so the mean edge length lands near h.
_AREA_FACTOR = 1.4
_EQUILATERAL = math.sqrt(3.0) / 4.0
_MARK = {NEUMANN: 1, DIRICHLET: 2, CUT: 3}
_TAG = {v: k for k, v in _MARK.items()}


class InfeasibleResolution(ValueError):
    pass


class MeshQualityFailure(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming P1 triangulation.

    ``boundary_edges`` are oriented with the domain on the left and carry a
    ``neumann``/``dirichlet`` tag each. ``pairing`` is the vertex involution
    induced by ``x -> -x`` (``None`` for non-symmetric domains).
    ``pinned`` lists isolated Dirichlet vertices (a sector apex).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    pairing: np.ndarray | None = None
    corner_marks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    pinned: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    h: float = math.nan
    domain: Domain | None = None

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_tags",
                     "pairing", "corner_marks", "pinned"):
            arr = getattr(self, name)
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Lumped area per vertex (one third of each incident triangle)."""
        out = np.zeros(self.n_vertices)
        np.add.at(out, self.triangles.ravel(), np.repeat(np.abs(self.signed_areas) / 3.0, 3))
        return out

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @cached_property
    def dirichlet_vertices(self) -> np.ndarray:
        e = self.boundary_edges[self.boundary_tags == DIRICHLET]
        return np.union1d(np.unique(e), self.pinned).astype(int)

    @cached_property
    def boundary_loop_ids(self) -> np.ndarray:
        """Loop label per vertex; -1 for interior vertices."""
        lab = np.full(self.n_vertices, -1)
        nxt = dict(self.boundary_edges.tolist())
        loop = 0
        for start in nxt:
            if lab[start] >= 0:
                continue
            v = start
            while lab[v] < 0:
                lab[v] = loop
                v = nxt.get(v, start)
            loop += 1
        return lab

    @property
    def n_boundary_loops(self) -> int:
        ids = self.boundary_loop_ids
        return int(ids.max()) + 1 if len(ids) and ids.max() >= 0 else 0

    def angles(self) -> np.ndarray:
        """Interior angles in degrees, shape (n_triangles, 3)."""
        p = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            out[:, k] = np.degrees(np.arctan2(np.abs(cross), np.einsum("ij,ij->i", a, b)))
        return out

    def mean_edge_length(self) -> float:
        e = self.vertices[self.edges]
        return float(np.linalg.norm(e[:, 1] - e[:, 0], axis=1).mean())


class _Sizing:
    """Target edge length field.

    ``h`` away from corners; within ``3h`` of a reentrant corner the size
    ramps linearly down to ``h/4`` (two halvings) at the corner itself.
    """

    def __init__(self, h, corners=(), apex=None):
        self.h = h
        self.corners = np.asarray(corners, dtype=float).reshape(-1, 2)
        self.apex = apex
        self.floor = h / 4
        if apex is not None:
            self.floor = min(self.floor, apex[1] * h / 4)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        h = self.h
        s = np.full(len(pts), h)
        if len(self.corners):
            d = np.min(np.linalg.norm(pts[:, None, :] - self.corners[None], axis=2), axis=1)
            s = np.minimum(s, np.clip(h / 4 + (d - 0.75 * h) / 3, h / 4, h))
        if self.apex is not None:
            (ax, ay), alpha = self.apex
            r = np.hypot(pts[:, 0] - ax, pts[:, 1] - ay)
            first = h / 4
            s = np.minimum(s, np.where(r < first, first, alpha * r))
        return s


def _discretize(seg: BoundarySegment, size: _Sizing, scale: float) -> np.ndarray:
    """Nodes along ``seg`` equidistributed w.r.t. the sizing; end excluded."""
    L = seg.length
    m = max(256, int(math.ceil(12 * L / (size.floor * scale))))
    t = np.linspace(0.0, 1.0, m + 1)
    dens = 1.0 / (scale * size(seg.points(t)))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * (L / m))])
    n = max(1, int(round(cum[-1])))
    tn = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, t)
    tn[0], tn[-1] = 0.0, 1.0
    return seg.points(tn[:-1])


def _cut_nodes(seg: BoundarySegment, size: _Sizing, scale: float) -> np.ndarray:
    """Mirror-symmetric nodes on an axis cut (end excluded)."""
    xa, xb = seg.start[0], seg.end[0]
    lo, hi = min(xa, xb), max(xa, xb)
    if lo >= 0:
        xs = _line_x(lo, hi, size, scale)
    elif hi <= 0:
        xs = -_line_x(-hi, -lo, size, scale)[::-1]
    else:
        if lo != -hi:
            raise ValueError("axis cut straddling the origin must be centred")
        pos = _line_x(0.0, hi, size, scale)
        xs = np.concatenate([-pos[:0:-1], pos])
    if xa > xb:
        xs = xs[::-1]
    xs = xs[:-1]
    return np.c_[xs, np.zeros_like(xs)]


def _line_x(a: float, b: float, size: _Sizing, scale: float) -> np.ndarray:
    nodes = _discretize(line((a, 0.0), (b, 0.0)), size, scale)[:, 0]
    return np.append(nodes, b)


def _pslg(region, size, scale):
    pts, bcs, segs, marks, cut = [], [], [], [], set()
    for lp in region.loops:
        first = len(pts)
        for seg in lp:
            nodes = _cut_nodes(seg, size, scale) if seg.bc == CUT else _discretize(seg, size, scale)
            pts.extend(nodes)
            bcs.extend([seg.bc] * len(nodes))
        count = len(pts) - first
        for k in range(count):
            a, b = first + k, first + (k + 1) % count
            segs.append((a, b))
            marks.append(_MARK[bcs[a]])
            if bcs[a] == CUT:
                cut.update((a, b))
    return (np.asarray(pts, dtype=float), np.asarray(segs, dtype=np.int32),
            np.asarray(marks, dtype=np.int32), sorted(cut))


def _triangulate(region, size, scale):
    pts, segs, marks, cut = _pslg(region, size, scale)
    data = {"vertices": pts, "segments": segs, "segment_markers": marks.reshape(-1, 1)}
    if region.holes:
        data["holes"] = np.asarray(region.holes, dtype=float)
    max_area = _AREA_FACTOR * _EQUILATERAL * size.h**2
    angle = _TRIANGLE_ANGLE if region.apex is None else 20.0
    tri = triangle.triangulate(data, f"pq{angle}a{max_area:.17g}YQ")
    for _ in range(8):
        v, t = tri["vertices"], tri["triangles"]
        cent = v[t].mean(axis=1)
        target = _AREA_FACTOR * _EQUILATERAL * size(cent) ** 2
        p = v[t]
        area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        if np.all(area <= target * 1.000001):
            break
        tri = dict(tri)
        tri["triangle_max_area"] = target
        tri = triangle.triangulate(tri, f"rpq{angle}aYQ")
    if not np.array_equal(tri["vertices"][: len(pts)], pts):
        raise MeshQualityFailure("triangulator reordered the boundary nodes")
    return tri, np.asarray(cut, dtype=int)


def _orient_edges(triangles: np.ndarray, edges: np.ndarray) -> np.ndarray:
    directed = set(map(tuple, np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]],
                                         triangles[:, [2, 0]]]).tolist()))
    out = edges.copy()
    for k, (i, j) in enumerate(edges.tolist()):
        if (i, j) not in directed:
            out[k] = (j, i)
    return out


def _match_points(vertices, points, tol=1e-12) -> np.ndarray:
    idx = []
    for p in points:
        d = np.hypot(vertices[:, 0] - p[0], vertices[:, 1] - p[1])
        i = int(np.argmin(d))
        if d[i] <= tol * max(1.0, abs(p[0]) + abs(p[1])):
            idx.append(i)
    return np.unique(np.asarray(idx, dtype=int))


def _build(domain: Domain, h: float, scale: float) -> Mesh:
    region = domain.mesh_region()
    size = _Sizing(h, region.corners, region.apex)
    tri, cut = _triangulate(region, size, scale)
    V = np.asarray(tri["vertices"], dtype=float)
    T = np.asarray(tri["triangles"], dtype=int)
    S = np.asarray(tri["segments"], dtype=int)
    M = np.asarray(tri["segment_markers"], dtype=int).ravel()
    # Triangle returns counterclockwise triangles, but be defensive
    p = V[T]
    sa = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    T[sa < 0] = T[sa < 0][:, [0, 2, 1]]
    pairing = None
    if region.half:
        nh = len(V)
        is_cut = np.zeros(nh, dtype=bool)
        is_cut[cut] = True
        if np.any(V[is_cut, 1] != 0.0):
            raise MeshQualityFailure("cut node left the symmetry axis")
        by_x = {x: i for i, x in zip(np.flatnonzero(is_cut), V[is_cut, 0])}
        rot = np.empty(nh, dtype=int)
        noncut = np.flatnonzero(~is_cut)
        rot[noncut] = nh + np.arange(len(noncut))
        for i in np.flatnonzero(is_cut):
            rot[i] = by_x[-V[i, 0]]
        V = np.vstack([V, -V[noncut]])
        V[V == 0.0] = 0.0  # drop negative zeros
        T = np.vstack([T, rot[T]])
        keep = M != _MARK[CUT]
        S, M = S[keep], M[keep]
        S = np.vstack([S, rot[S]])
        M = np.concatenate([M, M])
        pairing = np.empty(len(V), dtype=int)
        pairing[:nh] = rot
        pairing[rot[noncut]] = noncut
    else:
        keep = M != _MARK[CUT]
        S, M = S[keep], M[keep]
    S = _orient_edges(T, S)
    tags = np.array([_TAG[m] for m in M])
    corners = _match_points(V, domain.corners())
    pinned = np.zeros(0, dtype=int)
    if isinstance(domain, Sector) and domain.apex_pinned():
        pinned = _match_points(V, [(0.0, 0.0)])
    return Mesh(V, T, S, tags, pairing, corners, pinned, float(h), domain)


def generate(domain: Domain, h: float, *, max_retries: int = 3) -> Mesh:
    """Triangulate ``domain`` with target edge length ``h``."""
    if not h > 0:
        raise ValueError("h must be positive")
    limit = domain.resolution_limit()
    if h > limit:
        raise InfeasibleResolution(
            f"h={h:g} cannot resolve the narrowest feature of {domain.variant} (need h <= {limit:g})")
    scale = 1.0
    for _ in range(max_retries + 1):
        mesh = _build(domain, h, scale)
        diag = validate(mesh)
        if diag.ok:
            return mesh
        scale *= 0.75
    raise MeshQualityFailure(f"mesh invariants not reached after {max_retries} retries: {diag}")


def min_angle_bound(domain: Domain | None) -> float:
    """Smallest admissible angle; input corners sharper than 20 degrees lower it."""
    if isinstance(domain, Sector) and domain.r_in == 0:
        return min(MIN_ANGLE, 0.999 * math.degrees(domain.opening))
    return MIN_ANGLE


@dataclass
class Diagnostics:
    min_angle: float
    min_angle_required: float
    flipped: list[int]
    open_loop_vertices: list[int]
    boundary_mismatch: int
    pairing_violations: list[str]
    n_loops: int
    expected_loops: int | None = None

    @property
    def ok(self) -> bool:
        return (self.min_angle >= self.min_angle_required and not self.flipped
                and not self.open_loop_vertices and self.boundary_mismatch == 0
                and not self.pairing_violations
                and (self.expected_loops is None or self.expected_loops == self.n_loops))


def validate(mesh: Mesh, min_angle: float | None = None) -> Diagnostics:
    """Check every mesh invariant; report rather than raise."""
    if min_angle is None:
        min_angle = min_angle_bound(mesh.domain)
    flipped = np.flatnonzero(mesh.signed_areas <= 0).tolist()
    ang = mesh.angles()
    amin = float(ang.min()) if len(ang) else 0.0

    E = mesh.boundary_edges
    outdeg = np.bincount(E[:, 0], minlength=mesh.n_vertices)
    indeg = np.bincount(E[:, 1], minlength=mesh.n_vertices)
    on_b = (outdeg + indeg) > 0
    open_loop = np.flatnonzero(on_b & ((outdeg != 1) | (indeg != 1))).tolist()

    t = mesh.triangles
    e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    topo = set(map(tuple, uniq[counts == 1].tolist()))
    tagged = set(map(tuple, np.sort(E, axis=1).tolist()))
    mismatch = len(topo ^ tagged)

    pv: list[str] = []
    s = mesh.pairing
    if s is not None:
        if len(s) != mesh.n_vertices or np.any(s[s] != np.arange(len(s))):
            pv.append("not an involution")
        else:
            bad = np.flatnonzero(np.any(mesh.vertices[s] != -mesh.vertices, axis=1))
            if len(bad):
                pv.append(f"{len(bad)} vertices not mapped to their negatives")
            tri = set(map(tuple, np.sort(t, axis=1).tolist()))
            img = set(map(tuple, np.sort(s[t], axis=1).tolist()))
            if tri != img:
                pv.append("triangles not mapped to triangles")
            for tag in (NEUMANN, DIRICHLET):
                et = np.sort(E[mesh.boundary_tags == tag], axis=1)
                a = set(map(tuple, et.tolist()))
                b = set(map(tuple, np.sort(s[et], axis=1).tolist())) if len(et) else set()
                if a != b:
                    pv.append(f"{tag} edges not mapped to {tag} edges")
            fixed = np.flatnonzero(s == np.arange(len(s)))
            if np.any(mesh.vertices[fixed] != 0.0):
                pv.append("fixed point away from the origin")

    expected = None
    if mesh.domain is not None:
        expected = len({seg.loop for seg in mesh.domain.boundary_segments()})
    return Diagnostics(amin, min_angle, flipped, open_loop, mismatch, pv,
                       mesh.n_boundary_loops, expected)


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement: every triangle is split into four."""
    V, T = mesh.vertices, mesh.triangles
    edges = mesh.edges
    n = len(V)
    mid = 0.5 * (V[edges[:, 0]] + V[edges[:, 1]])
    key = {e: n + k for k, e in enumerate(map(tuple, edges.tolist()))}

    def m(a, b):
        return np.array([key[(i, j) if i < j else (j, i)] for i, j in zip(a.tolist(), b.tolist())],
                        dtype=int)

    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    ab, bc, ca = m(a, b), m(b, c), m(c, a)
    T2 = np.vstack([np.c_[a, ab, ca], np.c_[ab, b, bc], np.c_[ca, bc, c], np.c_[ab, bc, ca]])
    E = mesh.boundary_edges
    em = m(E[:, 0], E[:, 1])
    E2 = np.vstack([np.c_[E[:, 0], em], np.c_[em, E[:, 1]]])
    tags2 = np.concatenate([mesh.boundary_tags, mesh.boundary_tags])
    pairing = None
    if mesh.pairing is not None:
        s = mesh.pairing
        pairing = np.concatenate([s, m(s[edges[:, 0]], s[edges[:, 1]])])
    V2 = np.vstack([V, mid])
    V2[V2 == 0.0] = 0.0
    return replace(mesh, vertices=V2, triangles=T2, boundary_edges=E2, boundary_tags=tags2,
                   pairing=pairing, corner_marks=mesh.corner_marks.copy(),
                   pinned=mesh.pinned.copy(), h=mesh.h / 2)


def write_vtk(path, mesh: Mesh, point_data: dict[str, np.ndarray] | None = None,
              title: str = "nodalsym mesh") -> Path:
    """Legacy ASCII VTK unstructured grid with optional scalar point fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, m = mesh.n_vertices, mesh.n_triangles
    lines = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    if point_data:
        lines.append(f"POINT_DATA {n}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (n,):
                raise ValueError(f"field {name!r} has shape {values.shape}, expected ({n},)")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.17g}" for v in values]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk(path) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """Read back what ``write_vtk`` produces (points, triangles, point fields)."""
    tokens = Path(path).read_text().split("\n")
    i = 0
    pts = tris = None
    fields_: dict[str, np.ndarray] = {}
    while i < len(tokens):
        ln = tokens[i].split()
        if ln and ln[0] == "POINTS":
            n = int(ln[1])
            pts = np.array([list(map(float, tokens[i + 1 + k].split()))[:2] for k in range(n)])
            i += n
        elif ln and ln[0] == "CELLS":
            m = int(ln[1])
            tris = np.array([list(map(int, tokens[i + 1 + k].split()))[1:] for k in range(m)])
            i += m
        elif ln and ln[0] == "SCALARS":
            name = ln[1]
            n = len(pts)
            fields_[name] = np.array([float(tokens[i + 2 + k]) for k in range(n)])
            i += n + 1
        i += 1
    return pts, tris, fields_
