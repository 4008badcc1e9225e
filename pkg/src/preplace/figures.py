"""Study figures: per-cell timing boxplots and placement-error panels.

Rendering is pinned to the Agg backend and strips the Software metadata
tag so the emitted PNG bytes are identical across reruns of the same
report (the CLI relies on this for reproducible output directories).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import StudyReport  # noqa: E402
from .sim import PREEMPTIVE, REACTIVE  # noqa: E402

_SAVE = dict(dpi=120, metadata={"Software": None})
_COLORS = {REACTIVE: "#c44e52", PREEMPTIVE: "#4c72b0"}


def _grouped_box(ax, report: StudyReport, attr: str, title: str) -> None:
    cells = sorted({t.target_cell for t in report.trials})
    for k, mode in enumerate((REACTIVE, PREEMPTIVE)):
        data = [
            [getattr(t, attr) for t in report.trials
             if t.target_cell == c and t.mode == mode]
            for c in cells
        ]
        data = [d if d else [np.nan] for d in data]
        pos = np.arange(len(cells)) + (k - 0.5) * 0.36
        bp = ax.boxplot(
            data,
            positions=pos,
            widths=0.3,
            patch_artist=True,
            showmeans=True,
            meanprops=dict(marker="o", markerfacecolor="white",
                           markeredgecolor="black", markersize=4),
            medianprops=dict(color="#ccb974", linewidth=1.6),
            flierprops=dict(marker=".", markersize=4),
        )
        for box in bp["boxes"]:
            box.set(facecolor=_COLORS[mode], alpha=0.75)
    ax.set_xticks(np.arange(len(cells)))
    ax.set_xticklabels([f"({x},{y})" for x, y in cells], rotation=45, fontsize=8)
    ax.set_xlabel("target cell")
    ax.set_ylabel("seconds")
    ax.set_title(title)
    handles = [plt.Rectangle((0, 0), 1, 1, facecolor=_COLORS[m], alpha=0.75)
               for m in (REACTIVE, PREEMPTIVE)]
    ax.legend(handles, (REACTIVE, PREEMPTIVE), fontsize=8)


def _error_panel(ax, report: StudyReport) -> None:
    pre = [t for t in report.trials
           if t.mode == PREEMPTIVE and t.pred_grids is not None]
    series = [
        ("|dx| grids", [t.pred_dx for t in pre]),
        ("|dy| grids", [t.pred_dy for t in pre]),
        ("dist grids", [t.pred_grids for t in pre]),
        ("dist m", [t.pred_m for t in pre]),
    ]
    data = [s or [np.nan] for _, s in series]
    bp = ax.boxplot(data, patch_artist=True, showmeans=True,
                    medianprops=dict(color="#ccb974", linewidth=1.6),
                    meanprops=dict(marker="o", markerfacecolor="white",
                                   markeredgecolor="black", markersize=4))
    for box in bp["boxes"]:
        box.set(facecolor="#55a868", alpha=0.75)
    ax.set_xticklabels([name for name, _ in series], fontsize=9)
    ax.set_title("commit-time placement error (preemptive)")


def render_study_figures(report: StudyReport, out_dir: str | Path) -> list[Path]:
    """Write response/grab/error figures under out_dir, return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    cells = sorted({t.target_cell for t in report.trials})
    width = max(6.0, 0.9 * len(cells) + 2.0)
    for attr, title, stem in (
        ("response_time", "response time by target cell", "response_time"),
        ("start_to_grab", "start-to-grab time by target cell", "start_to_grab"),
    ):
        fig, ax = plt.subplots(figsize=(width, 4.0))
        _grouped_box(ax, report, attr, title)
        fig.tight_layout()
        path = out_dir / f"{stem}.png"
        fig.savefig(path, **_SAVE)
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _error_panel(ax, report)
    fig.tight_layout()
    path = out_dir / "placement_error.png"
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    paths.append(path)
    return paths
