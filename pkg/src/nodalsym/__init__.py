"""Neumann eigenfunctions on domains symmetric under ``x -> -x``: meshing,
P1 finite elements, parity classification and nodal-domain counts."""
from .eigensolve import EigenResult, cluster, smallest_pairs, solve_mesh
from .fem import assemble, dirichlet_reduce, pairing_matrix
from .geometry import (BUILTINS, Annulus, Disk, Domain, Dumbbell, HalfWheelX, HalfWheelY,
                       Rectangle, Sector, Wheel, parse_domain)
from .mesh import Mesh, generate, refine
from .nodal import NodalReport, count_nodal_domains, courant_check, nodal_ring_test
from .symmetry import Verdict, parity_score, principle_verdict, split_eigenspace

__version__ = "0.1.0"

__all__ = [
    "BUILTINS", "Annulus", "Disk", "Domain", "Dumbbell", "EigenResult", "HalfWheelX",
    "HalfWheelY", "Mesh", "NodalReport", "Rectangle", "Sector", "Verdict", "Wheel", "assemble",
    "cluster", "count_nodal_domains", "courant_check", "dirichlet_reduce", "generate",
    "nodal_ring_test", "pairing_matrix", "parity_score", "parse_domain", "principle_verdict",
    "refine", "smallest_pairs", "solve_mesh", "split_eigenspace",
]
