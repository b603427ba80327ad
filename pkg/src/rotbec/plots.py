"""Matplotlib figure rendering for reports (file output only)."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_scaling(gaps: Sequence[float], energies: Sequence[float],
                 widths: Sequence[float], energy_fit, width_fit,
                 path: str) -> str:
    """Log-log panels: |energy| and width against the gap, with fit lines."""
    gaps = np.asarray(gaps, dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    gg = np.geomspace(gaps.min(), gaps.max(), 64)
    for ax, vals, fit, label in (
            (axes[0], np.abs(np.asarray(energies)), energy_fit, "energy"),
            (axes[1], np.asarray(widths), width_fit, "width")):
        ax.loglog(gaps, vals, "o", label="computed")
        if fit is not None:
            ax.loglog(gg, fit.coefficient * gg ** fit.exponent, "-",
                      label="fit: %.3f x gap^%.3f"
                            % (fit.coefficient, fit.exponent))
            ax.loglog(gg, fit.predicted_coefficient
                      * gg ** fit.predicted_exponent, "--",
                      label="predicted: %.3f x gap^%.3f"
                            % (fit.predicted_coefficient,
                               fit.predicted_exponent))
        ax.set_xlabel("a* - a")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_profile_convergence(a_over: Sequence[float],
                             sup_errs: Sequence[float],
                             last_obs, path: str) -> str:
    """Profile deviation along the sweep plus the final radial overlay."""
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    axes[0].semilogy(a_over, sup_errs, "o-")
    axes[0].set_xlabel("a / a*")
    axes[0].set_ylabel("sup | |w_a| - ref |")
    axes[0].grid(True, alpha=0.3)
    if last_obs is not None:
        mid = last_obs.w_a.shape[0] // 2
        axes[1].plot(last_obs.coords, np.abs(last_obs.w_a[mid]), "-",
                     label="|w_a| (final point)")
        axes[1].plot(last_obs.coords, last_obs.ref[mid], "--",
                     label="reference profile")
        axes[1].set_xlabel("x")
        axes[1].legend(fontsize=8)
        axes[1].grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_field(field, path: str, title: str = "") -> str:
    """Density and phase panels of a 2D field."""
    grid = field.grid
    ext = [grid.x1[0], grid.x1[-1], grid.x1[0], grid.x1[-1]]
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    im0 = axes[0].imshow(np.abs(field.values) ** 2, origin="lower",
                         extent=ext, cmap="viridis")
    axes[0].set_title("density" + (" - " + title if title else ""))
    fig.colorbar(im0, ax=axes[0], shrink=0.85)
    im1 = axes[1].imshow(np.angle(field.values), origin="lower", extent=ext,
                         cmap="twilight", vmin=-math.pi, vmax=math.pi)
    axes[1].set_title("phase")
    fig.colorbar(im1, ax=axes[1], shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_trial_scan(scan, path: str) -> str:
    """Trial-family energy against tau^2 with the fitted slope line."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    t2 = scan.tau ** 2
    ax.plot(t2, scan.energy, "o-", label="trial energy")
    top = scan.tau.size // 2
    anchor = scan.energy[top] - scan.slope * t2[top]
    ax.plot(t2, anchor + scan.slope * t2, "--",
            label="slope %.4g" % scan.slope)
    ax.set_xlabel("tau^2")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_energy_history(histories, labels, path: str) -> str:
    """Descent curves (energy minus final value, log scale)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for hist, lab in zip(histories, labels):
        h = np.asarray(hist, dtype=float)
        if h.size < 2:
            continue
        shifted = h - h.min() + 1e-16
        ax.semilogy(shifted, label=lab)
    ax.set_xlabel("step")
    ax.set_ylabel("energy above final")
    if labels:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
