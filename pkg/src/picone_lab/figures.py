"""Figure rendering for report artifacts; files land next to the report."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .grid import ScalarField


def _plot_field(ax, field: ScalarField, title: str):
    grid = field.grid
    if grid.dim == 1:
        ax.plot(grid.axis_coords[0], field.values)
        ax.set_xlabel("x")
    elif grid.dim == 2:
        mesh = ax.pcolormesh(grid.axis_coords[0], grid.axis_coords[1],
                             field.values.T, shading="nearest")
        ax.figure.colorbar(mesh, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_aspect("equal")
    else:
        k = grid.shape[2] // 2
        mesh = ax.pcolormesh(grid.axis_coords[0], grid.axis_coords[1],
                             field.values[:, :, k].T, shading="nearest")
        ax.figure.colorbar(mesh, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel(f"y (slice t = {grid.axis_coords[2][k]:.3g})")
        ax.set_aspect("equal")
    ax.set_title(title)


def render_figures(report, artifacts: dict, out_path) -> list[str]:
    """Render one PNG per artifact group; returns the written paths."""
    stem = Path(out_path).with_suffix("")
    written = []

    def save(fig, name):
        path = f"{stem}_{name}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    for name, field in artifacts.get("fields", {}).items():
        fig, ax = plt.subplots(figsize=(5, 4))
        _plot_field(ax, field, name.replace("_", " "))
        save(fig, name)

    history = artifacts.get("quotient_history")
    if history is not None and len(history) > 1:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        h = np.asarray(history)
        ax.semilogy(np.arange(len(h)), h - h[-1] + 1e-300)
        ax.set_xlabel("iteration")
        ax.set_ylabel("quotient above final value")
        ax.set_title("minimization history")
        save(fig, "history")

    lambdas = artifacts.get("lambdas")
    if lambdas:
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        ax.plot(range(len(lambdas)), lambdas, "o-")
        ax.set_xlabel("domain index (smallest first)")
        ax.set_ylabel("principal eigenvalue")
        ax.set_title("domain monotonicity")
        save(fig, "lambdas")

    conv = artifacts.get("convergence")
    if conv:
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        hs = np.asarray(conv["spacings"])
        errs = np.asarray(conv["errors"])
        ax.loglog(hs, errs, "o-", label="measured")
        ref = errs[0] * (hs / hs[0]) ** 2
        ax.loglog(hs, ref, "--", label="order 2")
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        ax.set_title(f"fitted order {conv['order']:.3f}")
        ax.legend()
        save(fig, "convergence")

    sides = [(c.name, c.lhs, c.rhs) for c in report.checks
             if c.lhs is not None and c.rhs is not None]
    if sides:
        fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(sides)), 3.5))
        idx = np.arange(len(sides))
        ax.bar(idx - 0.2, [s[1] for s in sides], width=0.4, label="lhs")
        ax.bar(idx + 0.2, [s[2] for s in sides], width=0.4, label="rhs")
        ax.set_xticks(idx)
        ax.set_xticklabels([s[0] for s in sides], rotation=30, ha="right",
                           fontsize=8)
        ax.set_title("checked inequalities")
        ax.legend()
        save(fig, "checks")

    return written
