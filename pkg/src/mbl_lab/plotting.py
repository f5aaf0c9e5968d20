"""Projection scatter plots in the style of the self-play figures."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def render_plot(
    records: Sequence,
    projection: Sequence[tuple[int, int]],
    target=None,
    path: str | Path = "trajectories.png",
    with_std: bool = True,
) -> Path:
    """Scatter two projected coordinates of every recorded step.

    Points run yellow -> orange -> violet -> black with time; ``target`` (a
    profile or flat vector) is marked with a blue cross. With ``with_std`` a
    lower panel shows each player's rolling standard deviation.
    """
    if len(projection) != 2:
        raise ValueError("projection needs exactly two (player, action) pairs")
    if not records:
        raise ValueError("no records to plot")
    off = records[0].offsets
    cols = []
    for player, action in projection:
        if not (0 <= player < len(records[0].action_counts) and 0 <= action < records[0].action_counts[player]):
            raise ValueError(f"projection ({player}, {action}) does not fit the game")
        cols.append(off[player] + action)

    if with_std:
        fig, (ax, ax_std) = plt.subplots(2, 1, figsize=(5, 7), gridspec_kw={"height_ratios": [3, 1]})
    else:
        fig, ax = plt.subplots(figsize=(5, 5))
    cmap = plt.get_cmap("inferno_r")
    for rec in records:
        steps = rec.steps
        frac = steps / max(int(steps[-1]), 1)
        ax.scatter(rec.profiles[:, cols[0]], rec.profiles[:, cols[1]], c=cmap(0.1 + 0.9 * frac), s=2, linewidths=0)
        if with_std:
            for p, colour in zip(range(rec.rolling_std.shape[1]), ("tab:red", "tab:blue", "tab:green")):
                ax_std.plot(steps, rec.rolling_std[:, p], color=colour, lw=0.6, alpha=0.7)
    if target is not None:
        flat = getattr(target, "flat", np.asarray(target, dtype=float))
        ax.plot(flat[cols[0]], flat[cols[1]], "x", color="blue", ms=10, mew=2)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_xlabel(f"player {projection[0][0]}, action {projection[0][1]}")
    ax.set_ylabel(f"player {projection[1][0]}, action {projection[1][1]}")
    if with_std:
        ax_std.set_xlabel("step")
        ax_std.set_ylabel("rolling std")
        ax_std.ticklabel_format(axis="x", style="sci", scilimits=(0, 0))
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
