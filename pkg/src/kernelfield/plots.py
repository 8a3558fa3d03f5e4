"""Figure rendering for the command-line reports.

Every command that writes a delimited trace also renders a figure next to it
(unless plots are disabled).  All figures go through savefig with the Agg
backend, so no display is needed.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.figsize": (6.4, 4.0),
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
        "legend.fontsize": 8,
    }
)


def _save(fig, path, config_hash=None):
    meta = {"Description": f"config_hash={config_hash}"} if config_hash else None
    fig.savefig(path, bbox_inches="tight", metadata=meta)
    plt.close(fig)


def plot_field_evolution(x, snapshots, path, title="field evolution",
                         reference=None, config_hash=None, max_lines=12):
    """Overlay field snapshots, early steps light, late steps dark."""
    snapshots = np.asarray(snapshots)
    idx = np.unique(np.linspace(0, len(snapshots) - 1, max_lines).astype(int))
    fig, ax = plt.subplots()
    cmap = plt.get_cmap("viridis")
    for rank, i in enumerate(idx):
        ax.plot(x, snapshots[i], color=cmap(rank / max(len(idx) - 1, 1)),
                lw=1.0, label=f"step {i}" if rank in (0, len(idx) - 1) else None)
    if reference is not None:
        ax.plot(x, reference, "k--", lw=1.4, label="reference")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_title(title)
    ax.legend(loc="best")
    _save(fig, path, config_hash)


def plot_error_trace(steps, errors, path, ylabel="max |error|",
                     title="tracking error", config_hash=None):
    fig, ax = plt.subplots()
    errors = np.asarray(errors, dtype=float)
    positive = errors[errors > 0]
    if positive.size and positive.max() / max(positive.min(), 1e-300) > 50:
        ax.semilogy(steps, np.maximum(errors, 1e-300), lw=1.2)
    else:
        ax.plot(steps, errors, lw=1.2)
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path, config_hash)


def plot_estimation_trace(steps, error_norm, trace_P, path, config_hash=None):
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.0))
    err = np.asarray(error_norm, dtype=float)
    if np.all(err > 0):
        axes[0].semilogy(steps, err, lw=1.2)
    else:
        axes[0].plot(steps, err, lw=1.2)
    axes[0].set_ylabel("error norm")
    axes[1].plot(steps, trace_P, lw=1.2, color="tab:orange")
    axes[1].set_ylabel("trace P")
    axes[1].set_xlabel("step")
    axes[0].set_title("state estimation")
    _save(fig, path, config_hash)


def plot_spectrum(eigenvalues, path, cyclic_index=None, config_hash=None):
    """Eigenvalues in the complex plane against the unit circle."""
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    theta = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(theta), np.sin(theta), "k-", lw=0.8, alpha=0.5)
    ev = np.asarray(eigenvalues)
    ax.scatter(ev.real, ev.imag, s=22, color="tab:blue", zorder=3)
    ax.axhline(0, color="gray", lw=0.5)
    ax.axvline(0, color="gray", lw=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    title = "transition spectrum"
    if cyclic_index is not None:
        title += f" (cyclic index {cyclic_index})"
    ax.set_title(title)
    ax.set_aspect("equal")
    _save(fig, path, config_hash)


def plot_placement(x_domain, centers, locations, path, mode="sensing", config_hash=None):
    fig, ax = plt.subplots(figsize=(6.4, 2.2))
    ax.scatter(np.asarray(centers).ravel(), np.zeros(len(centers)), marker="|",
               s=160, color="gray", label="centers")
    ax.scatter(np.asarray(locations).ravel(), np.zeros(len(locations)), marker="o",
               s=34, color="tab:red", label=mode)
    ax.set_yticks([])
    ax.set_xlim(*x_domain)
    ax.set_xlabel("x")
    ax.legend(loc="upper right")
    ax.set_title(f"proposed {mode} locations")
    _save(fig, path, config_hash)
