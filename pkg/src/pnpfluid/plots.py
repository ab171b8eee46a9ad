"""Plot emission for finished runs (deterministic PNG byte streams)."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import snapshot_io

_SAVEKW = dict(dpi=110, metadata={"Software": "pnpfluid"})


def read_diagnostics(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    if not rows:
        return {}
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def plot_run(run_dir, out_dir=None) -> list[str]:
    """Emit time-series and field plots for a run directory; returns paths."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir / "plots"
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    diag = read_diagnostics(run_dir / "diagnostics.csv")
    if diag:
        fig, axes = plt.subplots(2, 2, figsize=(9, 6))
        t = diag["t"]
        ax = axes[0, 0]
        ax.plot(t, diag["E_k"], label="E_k")
        ax.plot(t, diag["E_d"], label="E_d")
        ax.plot(t, diag["E_p"], label="E_p")
        ax.set_xlabel("t")
        ax.set_title("mechanical energy ledger")
        ax.legend(fontsize=8)
        ax = axes[0, 1]
        ax.plot(t, diag["E_el"])
        ax.set_xlabel("t")
        ax.set_title("electrostatic energy")
        ax = axes[1, 0]
        ax.plot(t, diag["gap"])
        ax.set_xlabel("t")
        ax.set_title("particle-wall gap")
        ax = axes[1, 1]
        i = 0
        while f"moles_{i}" in diag:
            ax.plot(t, diag[f"moles_{i}"], label=f"species {i}")
            i += 1
        ax.plot(t, diag["total_fixed_charge"], "--", label="fixed charge")
        ax.set_xlabel("t")
        ax.set_title("conserved totals")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / "series.png"
        fig.savefig(path, **_SAVEKW)
        plt.close(fig)
        written.append(str(path))

    snaps = sorted((run_dir / "snapshots").glob("*.snap"))
    for snap in snaps:
        state, ctx = snapshot_io.read_snapshot(snap)
        grid = ctx.grid_obj
        extent = (grid.x0, grid.x1, grid.y0, grid.y1)
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
        im = axes[0].imshow(state.psi.T, origin="lower", extent=extent)
        axes[0].set_title(f"psi  (t={state.t:.4g})")
        fig.colorbar(im, ax=axes[0], shrink=0.8)
        uc, vc = state.vel.center_values()
        speed = np.hypot(uc, vc)
        im = axes[1].imshow(speed.T, origin="lower", extent=extent)
        axes[1].set_title("|u|")
        fig.colorbar(im, ax=axes[1], shrink=0.8)
        field = state.N[0] if state.N else state.rho
        im = axes[2].imshow(field.T, origin="lower", extent=extent)
        axes[2].set_title("N_0" if state.N else "rho")
        fig.colorbar(im, ax=axes[2], shrink=0.8)
        for ax in axes:
            ax.contour(np.linspace(grid.x0 + grid.h / 2, grid.x1 - grid.h / 2, grid.nx),
                       np.linspace(grid.y0 + grid.h / 2, grid.y1 - grid.h / 2, grid.ny),
                       state.phase.chi_body.T, levels=[0.5], colors="w",
                       linewidths=0.8)
        fig.tight_layout()
        path = out_dir / f"fields_{snap.stem}.png"
        fig.savefig(path, **_SAVEKW)
        plt.close(fig)
        written.append(str(path))
    return written
