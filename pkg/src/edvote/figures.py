"""Figures for audit and simulation reports, written next to their CSV/JSON."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (5.0, 3.2),
    "savefig.dpi": 150,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_deterrence_curve(
    curve: Sequence[tuple[int, Fraction]], path, *, seconds: int | None = None
) -> Path:
    """Forgeable fraction against adversary hashrate (log2 axis)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        rates = [max(h, 1) for h, _ in curve]
        fracs = [float(f) for _, f in curve]
        ax.step(rates, fracs, where="post", color="C3")
        ax.set_xscale("log", base=2)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("adversary hashrate (hashes/s)")
        ax.set_ylabel("forgeable fraction of votes")
        if seconds is not None:
            ax.set_title(f"Re-mining budget over {seconds} s")
        ax.grid(alpha=0.3)
        return _save(fig, path)


def plot_zeros_histogram(histogram: dict[int, int], path, *, floor: int | None = None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        zs = sorted(histogram)
        ax.bar(zs, [histogram[z] for z in zs], width=0.8, color="C0")
        if floor is not None:
            ax.axvline(floor - 0.5, color="k", ls="--", lw=0.8, label=f"work floor ({floor})")
            ax.legend(frameon=False)
        ax.set_xlabel("leading zero bits per published block")
        ax.set_ylabel("blocks")
        return _save(fig, path)
