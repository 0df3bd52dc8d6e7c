"""Figures for the corpus report."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .corpus import CorpusRow  # noqa: E402

_FLOOR = 1e-18


def _by_program(rows: list[CorpusRow]) -> dict[str, list[CorpusRow]]:
    groups: dict[str, list[CorpusRow]] = defaultdict(list)
    for r in rows:
        groups[r.program].append(r)
    return dict(groups)


def plot_errors(rows: list[CorpusRow], path: str | Path) -> Path:
    """Per-program scatter of oracle distance (log scale) against tolerance."""
    groups = _by_program(rows)
    fig, ax = plt.subplots(figsize=(8, 0.45 * len(groups) + 1.5))
    for y, rs in enumerate(groups.values()):
        kept = [r for r in rs if math.isfinite(r.error)]
        ax.scatter([max(r.error, _FLOOR) for r in kept], [y] * len(kept), s=12, alpha=0.6,
                   color=["tab:blue" if r.passed else "tab:red" for r in kept])
        if rs[0].tolerance > 0:
            ax.plot([rs[0].tolerance] * 2, [y - 0.35, y + 0.35], color="black", lw=1)
    ax.set_xscale("log")
    ax.set_xlim(_FLOOR / 10, 1)
    ax.set_yticks(range(len(groups)), list(groups))
    ax.set_xlabel("distance from oracle (0 drawn at 1e-18); tick = tolerance")
    ax.invert_yaxis()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_pass_counts(rows: list[CorpusRow], path: str | Path) -> Path:
    groups = _by_program(rows)
    names = list(groups)
    passed = [sum(r.passed for r in groups[n]) for n in names]
    failed = [len(groups[n]) - p for n, p in zip(names, passed)]
    fig, ax = plt.subplots(figsize=(8, 0.45 * len(names) + 1.5))
    ax.barh(names, passed, color="tab:blue", label="pass")
    ax.barh(names, failed, left=passed, color="tab:red", label="fail")
    ax.set_xlabel("trials")
    ax.invert_yaxis()
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
