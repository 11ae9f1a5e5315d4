"""PNG figures for the CLI reports (Agg canvas, no pyplot state)."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure
from matplotlib.tri import Triangulation

from .mesh import Mesh


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    return path


def plot_modes(path, mesh: Mesh, V: np.ndarray, labels: list[str] | None = None,
               ncols: int = 3) -> Path:
    """Eigenfunctions as colour maps with their zero level set."""
    n = V.shape[1]
    ncols = min(ncols, n)
    nrows = math.ceil(n / ncols)
    fig = Figure(figsize=(3.2 * ncols, 3.0 * nrows))
    tri = Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
    for i in range(n):
        ax = fig.add_subplot(nrows, ncols, i + 1)
        v = V[:, i]
        vmax = np.abs(v).max() or 1.0
        ax.tripcolor(tri, v, cmap="RdBu_r", vmin=-vmax, vmax=vmax, shading="gouraud")
        if v.min() < 0 < v.max():
            ax.tricontour(tri, v, levels=[0.0], colors="k", linewidths=0.8)
        ax.set_aspect("equal")
        ax.set_axis_off()
        if labels:
            ax.set_title(labels[i], fontsize=9)
    return _save(fig, path)


def plot_sweep(path, result) -> Path:
    rows = [r for r in result.rows if not r.error]
    eps = np.array([r.eps for r in rows])
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(eps, [r.step1_bound for r in rows], "k--", label="test-function bound")
    ax.plot(eps, [r.nu_right for r in rows], "s-", ms=4, label="mixed, right half")
    ax.plot(eps, [r.nu_upper for r in rows], "^-", ms=4, label="mixed, upper half")
    ax.plot(eps, [r.mu2 for r in rows], "-", color="0.5")
    for verdict, colour in (("Even", "tab:red"), ("Odd", "tab:blue"), ("Mixed", "tab:green")):
        sel = [r for r in rows if r.verdict == verdict]
        if sel:
            ax.plot([r.eps for r in sel], [r.mu2 for r in sel], "o", color=colour,
                    label=f"second eigenvalue ({verdict.lower()})")
    if result.eps_star is not None:
        ax.axvline(result.eps_star, color="tab:red", lw=0.8, ls=":")
    ax.set_xlabel("passage half-angle")
    ax.set_ylabel("eigenvalue")
    ax.set_ylim(0, 1.2 * max(max(r.nu_right, r.nu_upper, r.mu2) for r in rows))
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_step3(path, result) -> Path:
    rows = sorted(result.rows, key=lambda r: r.eps)
    eps = [r.eps for r in rows]
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for name in ("passage", "hub_sector", "tire_sector", "wedge", "hub_half", "tire_half",
                 "nu_right", "nu_upper"):
        ax.semilogy(eps, [getattr(r, name) for r in rows], "o-", ms=3, label=name.replace("_", " "))
    ax.set_xlabel("passage half-angle")
    ax.set_ylabel("first mixed eigenvalue")
    ax.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def plot_census(path, rows) -> Path:
    fig = Figure(figsize=(6, 3))
    ax = fig.add_subplot()
    names = [r.name for r in rows]
    colours = ["tab:blue" if r.verdict == "HOLDS" else "tab:red" for r in rows]
    ax.bar(names, [r.mu2 for r in rows], color=colours)
    ax.set_yscale("log")
    ax.set_ylabel("second eigenvalue")
    ax.set_title("blue: odd second eigenspace, red: contains an even mode", fontsize=9)
    return _save(fig, path)
