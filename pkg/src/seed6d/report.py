"""Matplotlib figures rendered to files alongside the CSV/JSON outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .scenarios import TRACE_FIELDS

_AXIS_UNITS = {"roll": "rad", "pitch": "rad", "yaw": "rad", "x": "m", "y": "m", "z": "m"}


def plot_contact_trace(rows: list, summary: dict, path: Path | str) -> None:
    """F_z and tau_x against time, with the commanded setpoints overlaid."""
    arr = np.asarray(rows, dtype=float)
    t = arr[:, 0]
    f_z = arr[:, len(TRACE_FIELDS) - 2]
    tau_x = arr[:, len(TRACE_FIELDS) - 1]
    fd_fz = arr[:, TRACE_FIELDS.index("fd_f_z")]

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax1.plot(t, f_z, label="achieved $F_z$")
    ax1.plot(t, fd_fz, "--", label="commanded $f_z$")
    ax1.set_ylabel("force [N]")
    ax1.legend(loc="best")
    ax1.set_title(f"{summary['name']} ({summary['mode']})")
    ax2.plot(t, tau_x, color="tab:red")
    ax2.set_ylabel(r"$\tau_x$ [N m]")
    ax2.set_xlabel("time [s]")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_estimator_report(report: dict, path: Path | str) -> None:
    """Estimate-vs-truth scatter, one panel per sweep axis."""
    sweeps = report["sweeps"]
    n = len(sweeps)
    fig, axes = plt.subplots(1, max(n, 1), figsize=(3.2 * max(n, 1), 3.2))
    if n == 1:
        axes = [axes]
    by_axis = {}
    for row in report["rows"]:
        by_axis.setdefault(row["axis"], []).append(row)
    from .scenarios import _AXIS_INDEX

    for ax, sweep in zip(axes, sweeps):
        axis = sweep["axis"]
        idx = _AXIS_INDEX[axis]
        truth = np.array([r["true"][idx] for r in by_axis[axis]])
        est = np.array([r["estimate"][idx] for r in by_axis[axis]])
        ax.plot(truth, truth, "k--", lw=0.8)
        ax.plot(truth, est, ".", ms=4)
        ax.set_title(f"{axis} (rms {sweep['rms']:.3g})")
        ax.set_xlabel(f"true [{_AXIS_UNITS[axis]}]")
    axes[0].set_ylabel("estimate")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sysid_report(report_dict: dict, path: Path | str) -> None:
    """Bar chart of identified stiffness with bootstrap error bars."""
    names = ["k_r", "k_p", "k_y", "k_fx", "k_fy", "k_fz"]
    values = [
        v if v is not None else float("nan")
        for v in report_dict["k_tau"] + report_dict["k_f"]
    ]
    std = report_dict["bootstrap_std"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, values, yerr=std, capsize=3)
    ax.set_ylabel("stiffness [N m/rad | N/m]")
    ax.set_title("identified stiffness (bootstrap std)")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
