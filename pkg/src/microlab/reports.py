"""Figure rendering for the command-line reports.

matplotlib is imported lazily inside each function (Agg backend) so the
library core never depends on a display or on matplotlib being importable.
Every function renders one PNG next to the delimited output and returns the
path it wrote.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .covering import SquareCover
from .grids import GridField
from .scaling import SandwichReport, SweepRecord

__all__ = [
    "plot_field",
    "plot_sweep",
    "plot_fit",
    "plot_sandwich",
    "plot_trace",
    "plot_cover",
]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def plot_field(field: GridField, path: str, title: str = "") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(field.values, origin="lower", extent=(0, 1, 0, 1),
                   aspect="auto", cmap="RdBu_r")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sweep(records: Sequence[SweepRecord], path: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    labels = sorted({r.construction for r in records if r.breakdown is not None})
    for label in labels:
        pts = sorted((r.epsilon, r.breakdown.total) for r in records
                     if r.construction == label and r.breakdown is not None)
        ax.loglog([e for e, _ in pts], [t for _, t in pts],
                  marker="o", label=label)
    best = sorted((r.epsilon, r.breakdown.total) for r in records
                  if r.best and r.breakdown is not None)
    if best:
        ax.loglog([e for e, _ in best], [t for _, t in best],
                  "k--", lw=1, label="best")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_fit(records: Sequence[SweepRecord], slope: float, intercept: float,
             path: str) -> str:
    plt = _pyplot()
    best = {}
    for r in records:
        if r.breakdown is None:
            continue
        cur = best.get(r.epsilon)
        if cur is None or r.breakdown.total < cur:
            best[r.epsilon] = r.breakdown.total
    eps = np.array(sorted(best))
    vals = np.array([best[e] for e in eps])
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    ax.loglog(eps, vals, "o", label="best energy")
    ax.loglog(eps, np.exp(intercept) * eps ** slope, "-",
              label=f"fit, slope {slope:.4f}")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_sandwich(report: SandwichReport, path: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    eps = [e for e, _ in report.ratios]
    ratios = [r for _, r in report.ratios]
    ax.semilogx(eps, ratios, "o-")
    ax.axhline(report.min_ratio, color="grey", ls=":")
    ax.axhline(report.max_ratio, color="grey", ls=":")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy / scaling envelope")
    ax.set_title("pass" if report.passed else "FAIL")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trace(trace: List[Tuple[int, float, float, float]], path: str) -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    its = [row[0] for row in trace]
    ax.plot(its, [row[2] for row in trace], label="smoothed")
    ax.plot(its, [row[3] for row in trace], label="exact")
    stages = sorted({row[1] for row in trace}, reverse=True)
    for d in stages[1:]:
        first = next(row[0] for row in trace if row[1] == d)
        ax.axvline(first, color="grey", ls=":", lw=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_cover(cover: SquareCover, path: str,
               max_squares: Optional[int] = 4000) -> str:
    plt = _pyplot()
    from matplotlib.patches import Rectangle
    fig, ax = plt.subplots(figsize=(5.5, 5.0))
    cmap = plt.get_cmap("tab20")
    squares = cover.all_squares()
    if max_squares is not None and len(squares) > max_squares:
        stride = len(squares) // max_squares + 1
        squares = squares[::stride]
    for q in squares:
        x0, y0, x1, y1 = q.bounds()
        ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, fill=False,
                               lw=0.4,
                               edgecolor=cmap(q.family_index() % 20)))
    for (x0, y0, x1, y1) in cover.omega:
        ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, fill=False,
                               lw=1.2, edgecolor="black"))
    ax.set_xlim(min(r[0] for r in cover.omega) - 0.05,
                max(r[2] for r in cover.omega) + 0.05)
    ax.set_ylim(min(r[1] for r in cover.omega) - 0.05,
                max(r[3] for r in cover.omega) + 0.05)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
