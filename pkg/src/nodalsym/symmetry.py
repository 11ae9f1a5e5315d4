"""Parity of eigenfunctions and eigenspaces under the rotation ``x -> -x``."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .eigensolve import EigenResult, cluster
from .fem import pairing_matrix

THRESHOLD = 1e-3


class NoPairing(ValueError):
    pass


class IndefiniteSplit(ValueError):
    pass


class Verdict(str, Enum):
    EVEN = "Even"
    ODD = "Odd"
    MIXED = "Mixed"

    def __str__(self):
        return self.value


class Principle(str, Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"

    def __str__(self):
        return self.value


def _pairing(obj) -> np.ndarray:
    pairing = getattr(obj, "pairing", obj)
    if pairing is None:
        raise NoPairing("mesh has no rotation pairing")
    return np.asarray(pairing)


def _apply(pairing: np.ndarray, v: np.ndarray) -> np.ndarray:
    # (P v)_i = v_{pairing[i]}
    return v[pairing]


def parity_score(v, M, pairing) -> float:
    """``(P v)^T M v / (v^T M v)``: +1 for even, -1 for odd vectors."""
    pairing = _pairing(pairing)
    v = np.asarray(v, dtype=float)
    Mv = M @ v
    norm = v @ Mv
    if not norm > 0:
        raise ValueError("parity of a zero vector is undefined")
    return float(_apply(pairing, v) @ Mv / norm)


def classify_score(score: float, threshold: float = THRESHOLD) -> Verdict:
    if score >= 1 - threshold:
        return Verdict.EVEN
    if score <= -(1 - threshold):
        return Verdict.ODD
    return Verdict.MIXED


@dataclass(frozen=True)
class SymmetryClass:
    verdict: Verdict
    score: float
    even_dim: int = 0
    odd_dim: int = 0


def classify(v, M, pairing, threshold: float = THRESHOLD) -> SymmetryClass:
    s = parity_score(v, M, pairing)
    verdict = classify_score(s, threshold)
    return SymmetryClass(verdict, s, int(verdict is Verdict.EVEN), int(verdict is Verdict.ODD))


def split_eigenspace(V, M, pairing) -> tuple[int, int]:
    """``(even_dim, odd_dim)`` of the span of the ``M``-orthonormal columns of ``V``.

    Diagonalizes the restriction of the pairing to the span, whose
    eigenvalues are +-1 when the span is invariant.
    """
    pairing = _pairing(pairing)
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    R = (M @ V).T @ _apply(pairing, V)
    w = np.linalg.eigvalsh(0.5 * (R + R.T))
    bad = w[np.abs(w) < 0.9]
    if len(bad):
        raise IndefiniteSplit(
            f"span is not rotation-invariant (restricted eigenvalues {np.round(w, 4).tolist()}); "
            "the cluster probably joins distinct eigenvalues")
    return int((w > 0).sum()), int((w < 0).sum())


def align_parity(V, M, pairing) -> tuple[np.ndarray, np.ndarray]:
    """Rotate an ``M``-orthonormal basis so each column is as even or odd as possible.

    Returns the rotated basis and the restricted pairing eigenvalues
    (ascending, so odd columns come first).
    """
    pairing = _pairing(pairing)
    V = np.asarray(V, dtype=float)
    R = (M @ V).T @ _apply(pairing, V)
    w, U = np.linalg.eigh(0.5 * (R + R.T))
    return V @ U, w


def projectors(pairing) -> tuple:
    """Even and odd projectors ``(I + P)/2`` and ``(I - P)/2`` as sparse matrices."""
    P = pairing_matrix(_pairing(pairing))
    eye = sp.identity(P.shape[0], format="csr")
    return 0.5 * (eye + P), 0.5 * (eye - P)


@dataclass(frozen=True)
class PrincipleReport:
    verdict: Principle
    indices: tuple[int, ...]
    even_dim: int
    odd_dim: int
    mu: float

    @property
    def space_parity(self) -> Verdict:
        if self.even_dim and self.odd_dim:
            return Verdict.MIXED
        return Verdict.EVEN if self.even_dim else Verdict.ODD


def second_cluster(eigen: EigenResult, rel_gap: float = 1e-6) -> range:
    """Indices (0-based) of the cluster containing the first nonconstant mode."""
    groups = cluster(eigen.eigenvalues, rel_gap)
    if len(groups) < 2:
        raise ValueError("need at least two clusters to locate mu_2")
    second = groups[1]
    if second.stop == len(eigen.eigenvalues):
        raise ValueError("mu_2 cluster may extend past the computed pairs; request more")
    return second


def principle_verdict(eigen: EigenResult, M, pairing, rel_gap: float = 1e-6) -> PrincipleReport:
    """Whether the whole second-eigenvalue cluster is odd (HOLDS) or not (FAILS)."""
    idx = second_cluster(eigen, rel_gap)
    even, odd = split_eigenspace(eigen.eigenvectors[:, idx], M, pairing)
    verdict = Principle.HOLDS if even == 0 else Principle.FAILS
    return PrincipleReport(verdict, tuple(idx), even, odd, float(eigen.eigenvalues[idx.start]))
