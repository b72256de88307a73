"""Figure rendering for the CLI report path.

Every report command can drop PNG figures next to its delimited output:
diagnostics curves, phase-space heatmaps of densities and fields, and the
convergence plot.  Rendering is headless (Agg) and file-based only.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_EXTENT_TORUS = (0.0, 2.0 * math.pi, -math.pi, math.pi)


def save_diagnostics_figure(path, records) -> None:
    """Mass and L1 curves over the output times."""
    t = [r.t for r in records]
    fig, (ax_mass, ax_err) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax_mass.plot(t, [r.mass - 1.0 for r in records], "o-")
    ax_mass.set_xlabel("t")
    ax_mass.set_ylabel("mass - 1")
    ax_mass.set_title("mass drift")
    ax_mass.grid(alpha=0.3)

    ax_err.plot(t, [r.l1_error for r in records], "o-")
    ax_err.set_xlabel("t")
    ax_err.set_ylabel("L1(num, exact)")
    ax_err.set_title("misfit vs exact path")
    ax_err.grid(alpha=0.3)
    if any(r.l1_error > 0 for r in records):
        ax_err.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _heatmap(path, values, t, label, extent, cmap, symmetric=False):
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    kwargs = {}
    if symmetric:
        vmax = float(np.abs(values).max()) or 1.0
        kwargs = {"vmin": -vmax, "vmax": vmax}
    im = ax.imshow(values.T, origin="lower", aspect="auto", extent=extent,
                   cmap=cmap, **kwargs)
    ax.set_xlabel("x")
    ax.set_ylabel("v")
    ax.set_title(f"{label} at t = {t:g}")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_density_figure(path, values, t, extent=_EXTENT_TORUS) -> None:
    _heatmap(path, values, t, "density", extent, "viridis")


def save_field_figure(path, values, t, extent=_EXTENT_TORUS) -> None:
    _heatmap(path, values, t, "acceleration", extent, "RdBu_r", symmetric=True)


def save_convergence_figure(path, rows) -> None:
    """log-log misfit under refinement with first/second order guides."""
    n = np.array([row.n for row in rows], float)
    err = np.array([row.l1_final for row in rows], float)
    fig, ax = plt.subplots(figsize=(4.8, 3.8))
    ax.loglog(n, err, "o-", label="L1 at t = 1")
    for order, style in ((1, "--"), (2, ":")):
        ax.loglog(n, err[0] * (n[0] / n) ** order, style, color="gray",
                  label=f"order {order}")
    ax.set_xlabel("cells per direction")
    ax.set_ylabel("L1 misfit")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
