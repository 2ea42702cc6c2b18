"""Figure rendering for command-line reports.

Every command that writes tables can also drop a PNG next to them.  All
figures are rendered off-screen (Agg backend) so the CLI works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "save_figure",
    "equilibrium_figure",
    "certificate_figure",
    "sensitivity_figure",
    "routing_sensitivity_figure",
    "centrality_figure",
    "target_figure",
    "opinion_figure",
    "sweep_figure",
]

_GRID = dict(alpha=0.3, linewidth=0.6)


def save_figure(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def equilibrium_figure(x_star: np.ndarray, title: str = "Equilibrium strategies"):
    """Grouped bars: one group per player, one bar per strategy component."""
    X = np.atleast_2d(np.asarray(x_star, dtype=float))
    N, n = X.shape
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * N * n), 3.2))
    width = 0.8 / n
    idx = np.arange(N)
    for k in range(n):
        label = f"component {k + 1}" if n > 1 else None
        ax.bar(idx + (k - (n - 1) / 2) * width, X[:, k], width, label=label)
    ax.set_xticks(idx)
    ax.set_xticklabels([str(i + 1) for i in range(N)])
    ax.set_xlabel("player")
    ax.set_ylabel("strategy")
    ax.set_title(title)
    ax.grid(axis="y", **_GRID)
    if n > 1:
        ax.legend(fontsize=8)
    return fig


def certificate_figure(margin: float, pieces: dict):
    """Waterfall of the curvature budget behind a monotonicity margin."""
    labels = list(pieces)
    values = [pieces[k] for k in labels]
    labels.append("margin")
    values.append(margin)
    colors = ["tab:blue"] * (len(values) - 1)
    colors.append("tab:green" if margin > 0 else "tab:red")
    fig, ax = plt.subplots(figsize=(4.5, 3.0))
    ax.bar(range(len(values)), values, color=colors)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("value")
    ax.set_title("Strong-monotonicity budget")
    ax.grid(axis="y", **_GRID)
    return fig


def sensitivity_figure(matrix: np.ndarray):
    """Heatmap of the equilibrium response to each parameter."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    vmax = np.max(np.abs(M)) or 1.0
    im = ax.imshow(M, cmap="RdBu_r", vmin=-vmax, vmax=vmax, aspect="auto")
    ax.set_xlabel("parameter")
    ax.set_ylabel("strategy coordinate")
    ax.set_title("Equilibrium sensitivity dx*/dy")
    fig.colorbar(im, ax=ax, shrink=0.85)
    return fig


def routing_sensitivity_figure(ds_dy: np.ndarray, braess: tuple, z: np.ndarray):
    """Edge loads next to the travel-time gradient; Braess edges in red."""
    ds = np.asarray(ds_dy, dtype=float)
    E = ds.shape[0]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8.0, 3.0))
    idx = np.arange(E)
    ax0.bar(idx, z, color="tab:gray")
    ax0.set_title("edge loads")
    ax0.set_xlabel("edge")
    colors = ["tab:red" if e in braess else "tab:blue" for e in range(E)]
    ax1.bar(idx, ds, color=colors)
    ax1.axhline(0.0, color="black", linewidth=0.8)
    ax1.set_title("d(total travel time)/dy")
    ax1.set_xlabel("edge")
    for ax in (ax0, ax1):
        ax.set_xticks(idx)
        ax.set_xticklabels([str(e + 1) for e in range(E)])
        ax.grid(axis="y", **_GRID)
    fig.tight_layout()
    return fig


def centrality_figure(bonacich: np.ndarray, keyplayer: np.ndarray):
    v = np.asarray(bonacich, dtype=float)
    w = np.asarray(keyplayer, dtype=float)
    idx = np.arange(v.shape[0])
    fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * v.shape[0]), 3.2))
    ax.bar(idx - 0.2, v, 0.4, label="walk centrality")
    ax.bar(idx + 0.2, w, 0.4, label="intervention score")
    ax.set_xticks(idx)
    ax.set_xticklabels([str(i + 1) for i in idx])
    ax.set_xlabel("player")
    ax.legend(fontsize=8)
    ax.grid(axis="y", **_GRID)
    return fig


def target_figure(scores: np.ndarray, chosen: int, mode: str):
    s = np.asarray(scores, dtype=float)
    idx = np.arange(s.shape[0])
    colors = ["tab:green" if i == chosen else "tab:blue" for i in idx]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * s.shape[0]), 3.2))
    ax.bar(idx, s, color=colors)
    ax.set_xticks(idx)
    ax.set_xticklabels([str(i + 1) for i in idx])
    ax.set_xlabel("player")
    ax.set_ylabel("score")
    ax.set_title(f"Intervention target ({mode.replace('_', ' ')})")
    ax.grid(axis="y", **_GRID)
    return fig


def opinion_figure(trajectory: np.ndarray):
    T = np.asarray(trajectory, dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for i in range(T.shape[1]):
        ax.plot(T[:, i], linewidth=1.2, label=f"agent {i + 1}" if T.shape[1] <= 8 else None)
    ax.set_xlabel("step")
    ax.set_ylabel("opinion")
    ax.set_title("Opinion dynamics")
    ax.grid(**_GRID)
    if T.shape[1] <= 8:
        ax.legend(fontsize=7)
    return fig


def sweep_figure(y_grid, rows, edge_label: str):
    """Two panels across the parameter grid, one curve per knowledge level.

    ``rows`` maps informed fraction q to parallel lists (total travel time,
    gradient along the swept edge).
    """
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8.4, 3.2))
    for q, (s_vals, g_vals) in sorted(rows.items()):
        ax0.plot(y_grid, s_vals, marker="o", markersize=3, label=f"q = {q:g}")
        ax1.plot(y_grid, g_vals, marker="o", markersize=3, label=f"q = {q:g}")
    ax1.axhline(0.0, color="black", linewidth=0.8)
    ax0.set_ylabel("total travel time")
    ax1.set_ylabel(f"d(total travel time)/d{edge_label}")
    for ax in (ax0, ax1):
        ax.set_xlabel(edge_label)
        ax.grid(**_GRID)
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig
