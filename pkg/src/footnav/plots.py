"""Report figures rendered next to the delimited outputs.

Figures are quick-look companions to the CSV files, never a data source.
All rendering is deterministic: fixed backend, fixed dpi, and PNG metadata
stripped so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=120, metadata={"Software": None})


def save_trajectory_figure(bundle, path) -> None:
    """Overview of one experiment: both fused feet and the center of gravity."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.plot(bundle.fused_left.xy[:, 0], bundle.fused_left.xy[:, 1],
            color="tab:olive", lw=0.8, label="left foot")
    ax.plot(bundle.fused_right.xy[:, 0], bundle.fused_right.xy[:, 1],
            color="tab:cyan", lw=0.8, label="right foot")
    ax.plot(bundle.cog.xy[:, 0], bundle.cog.xy[:, 1],
            color="tab:red", lw=1.2, label="center of gravity")
    ax.plot([0.0], [0.0], "k+", ms=10, label="start/finish")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_step_duration_figure(per_device: dict[str, tuple[np.ndarray, np.ndarray]],
                              reference: tuple[np.ndarray, np.ndarray], path) -> None:
    """Smartphone step durations against the reference, one panel per device.

    ``per_device`` maps a device id to ``(event_times, durations)``;
    ``reference`` holds the same pair from the foot-mounted data.
    """
    n = max(len(per_device), 1)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.0 * ncols, 3.0 * nrows),
                             squeeze=False, sharex=True, sharey=True)
    ref_t, ref_d = reference
    items = sorted(per_device.items()) or [("reference only", (np.zeros(0), np.zeros(0)))]
    for ax, (device, (t, d)) in zip(axes.flat, items):
        if ref_d.size:
            ax.plot(ref_t[1:], ref_d, ".", color="tab:blue", ms=3, label="reference")
        if d.size:
            ax.plot(t[1:], d, ".", color="tab:red", ms=3, label="smartphone")
        ax.set_title(str(device), fontsize=9)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("step duration [s]")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=7)
    for ax in axes.flat[len(items):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_diagnostics_figure(traj, path) -> None:
    """Covariance trace and stance gate of one reconstructed foot over time."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8.0, 4.0), sharex=True)
    if traj.trace_p is not None:
        ax1.semilogy(traj.t, np.maximum(traj.trace_p, 1e-30), lw=0.7, color="tab:purple")
    ax1.set_ylabel("trace(P)")
    ax1.grid(True, alpha=0.3)
    gate = traj.gate if traj.gate is not None else np.zeros(len(traj))
    ax2.fill_between(traj.t, 0, gate.astype(float), step="mid",
                     color="tab:green", alpha=0.5)
    ax2.set_ylabel("stance gate")
    ax2.set_xlabel("t [s]")
    ax2.set_ylim(-0.05, 1.05)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
