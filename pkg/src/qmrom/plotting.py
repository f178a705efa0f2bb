"""Headless figure rendering for run and comparison reports.

Every function writes a PNG next to the delimited output; nothing is shown
interactively.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "probe_figure",
    "error_overview_figure",
    "mode_shapes_figure",
    "coupling_figure",
    "singular_values_figure",
]

_FIGSIZE = (6.4, 3.6)


def probe_figure(path, times, series, title, ylabel="displacement [m]"):
    """Overlayed probe-point time traces; series maps label -> (t, values)."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, (t, values) in series.items():
        ax.plot(t, values, label=label, linewidth=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def error_overview_figure(path, report, title):
    """Global error versus reduced dof count, one line per method.

    Diverged cells appear as crosses pinned to the top of the axis.
    """
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    finite_vals = [v for v in report.cells.values() if not isinstance(v, str)]
    top = max(finite_vals) * 5.0 if finite_vals else 1.0
    for method in report.methods():
        dofs, vals, div_dofs = [], [], []
        for n in report.mode_counts():
            key = (method, n)
            if key not in report.cells:
                continue
            v = report.cells[key]
            d = report.reduced_dofs[key]
            if isinstance(v, str):
                div_dofs.append(d)
            else:
                dofs.append(d)
                vals.append(v)
        if dofs:
            (line,) = ax.semilogy(dofs, vals, "o-", label=method, markersize=4)
            color = line.get_color()
        else:
            color = None
        if div_dofs:
            ax.semilogy(
                div_dofs,
                [top] * len(div_dofs),
                "x",
                color=color,
                markersize=7,
                label=None if dofs else f"{method} (diverged)",
            )
    ax.set_xlabel("reduced dofs")
    ax.set_ylabel("global relative error (mass-weighted)")
    ax.set_title(title + "  (x = diverged)")
    ax.grid(alpha=0.3, which="both")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def mode_shapes_figure(path, mesh, modes_full, freqs_hz, scale=0.1, title=""):
    """Deformed outlines of the first mode shapes on the undeformed mesh."""
    k = modes_full.shape[1]
    fig, axes = plt.subplots(k, 1, figsize=(6.4, 1.6 * k), squeeze=False)
    span = mesh.nodes[:, 0].max() - mesh.nodes[:, 0].min()
    for i in range(k):
        ax = axes[i, 0]
        shape = modes_full[:, i].reshape(-1, 2)
        amp = np.abs(shape).max()
        factor = 0.0 if amp == 0 else scale * span / amp
        ax.plot(mesh.nodes[:, 0], mesh.nodes[:, 1], ".", markersize=1, color="0.8")
        deformed = mesh.nodes + factor * shape
        ax.plot(deformed[:, 0], deformed[:, 1], ".", markersize=1, color="C0")
        ax.set_aspect("equal")
        ax.set_title(f"mode {i + 1}: {freqs_hz[i]:.1f} Hz", fontsize=9)
        ax.tick_params(labelsize=7)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def coupling_figure(path, times, q, q_pairs, pairs, title, max_pairs=6):
    """Derivative amplitudes against the products of modal amplitudes."""
    energies = [
        (np.linalg.norm(q_pairs[:, c]), c, ij) for c, ij in enumerate(pairs)
    ]
    energies.sort(reverse=True)
    chosen = energies[:max_pairs]
    fig, axes = plt.subplots(len(chosen), 1, figsize=(6.4, 1.8 * len(chosen)),
                             squeeze=False, sharex=True)
    for row, (_, c, (i, j)) in enumerate(chosen):
        ax = axes[row, 0]
        expected = 0.5 * q[:, i] ** 2 if i == j else q[:, i] * q[:, j]
        ax.plot(times, q_pairs[:, c], label=f"q_{i + 1}{j + 1}", linewidth=1.0)
        ax.plot(times, expected, "--",
                label=(f"q_{i + 1}^2/2" if i == j else f"q_{i + 1}·q_{j + 1}"),
                linewidth=1.0)
        ax.legend(loc="upper right", fontsize=7)
        ax.grid(alpha=0.3)
        ax.tick_params(labelsize=7)
    axes[-1, 0].set_xlabel("time [s]")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def singular_values_figure(path, singular_values, rho, title):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    s = np.asarray(singular_values)
    ax.semilogy(np.arange(1, s.size + 1), s / s[0], "o-", markersize=4)
    ax.axhline(rho, color="r", linestyle="--", label=f"cutoff {rho:g}")
    ax.set_xlabel("index")
    ax.set_ylabel("normalized singular value")
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
