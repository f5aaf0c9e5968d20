"""CSV export/import of run records and output-directory resolution."""

from __future__ import annotations

import csv
import os
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

OUTPUT_ENV = "MBL_LAB_OUTPUT_DIR"


def output_path(path: str | Path) -> Path:
    """Resolve a relative output path against ``$MBL_LAB_OUTPUT_DIR`` when set."""
    path = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def std_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".std.csv")


def export_csv(records: Sequence, path: str | Path) -> tuple[Path, Path]:
    """Write ``run,step,player,action,prob`` rows plus a sibling ``*.std.csv``.

    Rows are ordered by run, step, player, action; values carry 9
    significant digits.
    """
    if not records:
        raise ValueError("no records to export")
    path = Path(path)
    spath = std_path(path)
    with path.open("w", newline="") as fh, spath.open("w", newline="") as sh:
        w = csv.writer(fh, lineterminator="\n")
        s = csv.writer(sh, lineterminator="\n")
        w.writerow(["run", "step", "player", "action", "prob"])
        s.writerow(["run", "step", "player", "std"])
        for rec in sorted(records, key=lambda r: r.run_id):
            off = rec.offsets
            for k, step in enumerate(rec.steps):
                row = rec.profiles[k]
                for p in range(len(rec.action_counts)):
                    for a in range(rec.action_counts[p]):
                        w.writerow([rec.run_id, int(step), p, a, f"{row[off[p] + a]:.9g}"])
                    s.writerow([rec.run_id, int(step), p, f"{rec.rolling_std[k, p]:.9g}"])
    return path, spath


def load_csv(path: str | Path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Read a probability CSV back into ``{run: (steps, profiles)}``."""
    rows: dict[int, dict[int, dict[tuple[int, int], float]]] = defaultdict(lambda: defaultdict(dict))
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows[int(row["run"])][int(row["step"])][(int(row["player"]), int(row["action"]))] = float(row["prob"])
    out = {}
    for run, by_step in rows.items():
        steps = np.array(sorted(by_step))
        keys = sorted(by_step[steps[0]])
        out[run] = (steps, np.array([[by_step[s][k] for k in keys] for s in steps]))
    return out
