"""Smallest eigenpairs of ``K v = mu M v`` by shift-invert block Lanczos.

The operator ``T = (K + sigma M)^{-1} M`` is self-adjoint in the ``M`` inner
product and its largest eigenvalues ``1 / (mu + sigma)`` belong to the
smallest ``mu``. The Krylov basis is kept fully ``M``-orthogonal and the
Ritz pairs come from an explicit Rayleigh-Ritz projection, so clustered
(near-double) eigenvalues are resolved as long as the block size exceeds
the cluster size.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .fem import assemble, dirichlet_reduce
from .mesh import Mesh

log = logging.getLogger(__name__)


class FactorizationFailure(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, msg, partial: EigenResult):
        super().__init__(msg)
        self.partial = partial


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    shift: float
    krylov_dim: int
    n_solves: int
    n_dof: int
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "converged": self.converged.tolist(),
            "shift": self.shift,
            "krylov_dim": self.krylov_dim,
            "n_solves": self.n_solves,
            "n_dof": self.n_dof,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def residual_norms(K, M, X: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """``||K x - mu M x|| / ||M x||`` per column."""
    MX = M @ X
    R = K @ X - MX * mu
    return np.linalg.norm(R, axis=0) / np.linalg.norm(MX, axis=0)


def _factor(K, M, shift: float, attempts: int = 4):
    for attempt in range(attempts):
        A = (K + shift * M).tocsc()
        try:
            lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
        except RuntimeError:
            lu = None
        if lu is not None and np.all(lu.U.diagonal() > 0):
            return lu, shift, attempt + 1
        log.debug("K + %g M not positive definite, raising the shift", shift)
        shift *= 10.0
    raise FactorizationFailure(f"K + sigma M not positive definite up to sigma={shift / 10:g}")


def _orthonormalize(W, M, Q, MQ, rng):
    """M-orthonormalize the columns of ``W`` against ``Q`` and each other."""
    cols, mcols = [], []
    for j in range(W.shape[1]):
        w = W[:, j].copy()
        for attempt in range(3):
            n0 = np.sqrt(abs(w @ (M @ w)))
            for _ in range(2):
                if Q is not None:
                    w -= Q @ (MQ.T @ w)
                for c, mc in zip(cols, mcols):
                    w -= c * (mc @ w)
            mw = M @ w
            n1 = np.sqrt(abs(w @ mw))
            if n1 > 1e-10 * n0 and n1 > 0:
                cols.append(w / n1)
                mcols.append(mw / n1)
                break
            # the block lost rank; continue with a fresh random direction
            w = rng.standard_normal(W.shape[0])
        else:
            raise FactorizationFailure("could not extend the Krylov basis")
    return np.column_stack(cols), np.column_stack(mcols)


def smallest_pairs(K, M, k: int, tol: float = 1e-8, *, shift: float | None = None,
                   block_size: int = 4, max_dim: int | None = None,
                   seed: int = 0) -> EigenResult:
    """The ``k`` smallest eigenpairs of the pencil ``(K, M)``.

    ``K`` must be positive semidefinite and ``M`` positive definite.
    Eigenvectors are returned ``M``-orthonormal, eigenvalues ascending, and
    each pair carries its residual ``||K v - mu M v|| / ||M v||``.
    The default shift is ``1 / (1^T M 1)``, the reciprocal domain area:
    smaller shifts make ``K + sigma M`` so ill-conditioned that residuals
    stall near 1e-9.
    """
    K = sp.csr_matrix(K)
    M = sp.csr_matrix(M)
    n = K.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}]")
    if not 1e-14 < tol < 1e-2:
        raise ValueError("tol must lie in (1e-14, 1e-2)")
    if shift is None:
        shift = 1.0 / float(M.sum())
    if not shift > 0:
        raise ValueError("shift must be positive")
    lu, shift, attempts = _factor(K, M, shift)
    rng = np.random.default_rng(seed)
    p = min(block_size, n)
    if max_dim is None:
        max_dim = max(12 * k + 40, 80)
    max_dim = min(max_dim, n)

    Q, MQ = _orthonormalize(rng.standard_normal((n, p)), M, None, None, rng)
    H = np.zeros((0, 0))
    blk, mblk = Q, MQ
    n_solves = 0
    while True:
        Y = lu.solve(mblk)
        n_solves += Y.shape[1]
        d = Q.shape[1]
        col = MQ.T @ Y
        Hn = np.zeros((d, d))
        d0 = H.shape[0]
        Hn[:d0, :d0] = H
        Hn[:, d0:] = col
        Hn[d0:, :d0] = col[:d0].T
        H = 0.5 * (Hn + Hn.T)

        if d >= min(k + p, n):
            theta, S = la.eigh(H)
            top = np.argsort(theta)[::-1][:k]
            X = Q @ S[:, top]
            mu = 1.0 / theta[top] - shift
            res = residual_norms(K, M, X, mu)
            if np.all(res <= tol) or d >= max_dim:
                break
        room = max_dim - d
        if room <= 0:
            break
        W = Y[:, : min(p, room)]
        blk, mblk = _orthonormalize(W, M, Q, MQ, rng)
        Q = np.column_stack([Q, blk])
        MQ = np.column_stack([MQ, mblk])

    # Rayleigh quotients are more accurate than 1/theta - shift near mu = 0
    mu = np.einsum("ij,ij->j", X, K @ X) / np.einsum("ij,ij->j", X, M @ X)
    order = np.argsort(mu)
    mu, X = mu[order], X[:, order]
    res = residual_norms(K, M, X, mu)
    result = EigenResult(mu, X, res, res <= tol, shift, Q.shape[1], n_solves, n,
                         {"factor_attempts": attempts, "block_size": p})
    if not np.all(result.converged):
        raise NoConvergence(
            f"{int((~result.converged).sum())} of {k} pairs above tol={tol:g} "
            f"at Krylov dimension {Q.shape[1]}", result)
    return result


def solve_mesh(mesh: Mesh, k: int = 6, tol: float = 1e-8, *, lump: bool = False,
               seed: int = 0, **kw) -> EigenResult:
    """Assemble, apply Dirichlet tags, solve, and zero-fill to all vertices."""
    K, M = assemble(mesh, lump=lump)
    red = dirichlet_reduce(K, M, mesh)
    res = smallest_pairs(red.K, red.M, k, tol, seed=seed, **kw)
    res.eigenvectors = red.expand(res.eigenvectors)
    return res


def cluster(eigenvalues, rel_gap: float = 1e-6) -> list[range]:
    """Maximal runs of consecutive eigenvalues closer than ``rel_gap``.

    Two neighbours belong together when ``mu_{i+1} - mu_i <= rel_gap * (1 + |mu_{i+1}|)``.
    Returns 0-based index ranges.
    """
    mu = np.asarray(eigenvalues, dtype=float)
    if len(mu) == 0:
        return []
    if np.any(np.diff(mu) < 0):
        raise ValueError("eigenvalues must be ascending")
    out, start = [], 0
    for i in range(len(mu) - 1):
        if mu[i + 1] - mu[i] > rel_gap * (1.0 + abs(mu[i + 1])):
            out.append(range(start, i + 1))
            start = i + 1
    out.append(range(start, len(mu)))
    return out


# Relative splitting of continuum-degenerate pairs behaves like C h^2 on our meshes.
_SPLIT_COEFF = 0.5


def discretization_gap(h: float, tol: float = 1e-8) -> float:
    """Cluster tolerance blending solver accuracy and an ``h^2`` error estimate."""
    return max(1e-6, 10 * tol, _SPLIT_COEFF * h * h)
