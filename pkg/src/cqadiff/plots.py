"""Figure rendering for experiment reports.

Every experiment writes a TSV; these helpers render the matching PNG next to
it. All rendering targets files (Agg backend), never a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import AblationResult, NoiseResult
from .model import EvalReport


def save_noise_curves(results: Sequence[NoiseResult], path: str | Path) -> Path:
    """F1 against noise level, one curve per noise kind."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    kinds = sorted({r.kind for r in results})
    for kind in kinds:
        rows = sorted((r for r in results if r.kind == kind), key=lambda r: r.x_percent)
        ax.plot([r.x_percent for r in rows], [r.report.f1 for r in rows],
                marker="o", label=kind)
    ax.set_xlabel("injected noise (% of edges)")
    ax.set_ylabel("F1")
    ax.set_title("Accuracy under training noise")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_ablation_bars(results: Sequence[AblationResult], path: str | Path) -> Path:
    """F1 per ablated element, the unablated run first."""
    path = Path(path)
    rows = sorted(results, key=lambda r: (r.dropped != "none", r.dropped))
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [r.dropped for r in rows]
    ax.bar(range(len(rows)), [r.report.f1 for r in rows], color="#4878d0")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("F1")
    ax.set_title("Ablation impact")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_domain_heatmap(
    grid: dict[tuple[str, str], EvalReport], path: str | Path
) -> Path:
    """F1 heatmap over (train domain, test domain) or (network, scorer) grids."""
    path = Path(path)
    rows = sorted({k[0] for k in grid})
    cols = sorted({k[1] for k in grid})
    data = [[grid[(r, c)].f1 if (r, c) in grid else float("nan") for c in cols]
            for r in rows]
    fig, ax = plt.subplots(figsize=(1.4 * len(cols) + 2, 0.8 * len(rows) + 2))
    im = ax.imshow(data, cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(cols)))
    ax.set_xticklabels(cols, rotation=30, ha="right")
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(rows)
    for i in range(len(rows)):
        for j in range(len(cols)):
            if data[i][j] == data[i][j]:
                ax.text(j, i, f"{data[i][j]:.2f}", ha="center", va="center",
                        color="white", fontsize=9)
    fig.colorbar(im, ax=ax, label="F1")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
