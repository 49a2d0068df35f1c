"""Loading and aggregating the runner's per-round CSV files.

This package consumes only the documented columns of per_round.csv
(`trial`, `t`, regret and satisfaction series); anything else in the file
is ignored, so schema extensions never change the figures.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

REQUIRED = ("trial", "t")


class SchemaError(ValueError):
    pass


def load_per_round(path) -> dict[str, np.ndarray]:
    """Columns of a per-round CSV as float arrays keyed by name."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path} is empty")
        missing = [c for c in REQUIRED if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path} lacks required columns: {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path} has a header but no data rows")
    out: dict[str, list[float]] = {name: [] for name in reader.fieldnames}
    for row in rows:
        for name in reader.fieldnames:
            out[name].append(float(row[name]))
    return {name: np.asarray(vals) for name, vals in out.items()}


def mean_std_by_round(data: dict[str, np.ndarray], column: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rounds, mean, population std) of a column across trials."""
    if column not in data:
        raise SchemaError(f"missing column {column!r}")
    rounds = np.unique(data["t"])
    means = np.empty_like(rounds, dtype=float)
    stds = np.empty_like(rounds, dtype=float)
    for i, t in enumerate(rounds):
        vals = data[column][data["t"] == t]
        means[i] = vals.mean()
        stds[i] = vals.std(ddof=0)
    return rounds, means, stds


def final_cumulative(data: dict[str, np.ndarray], column: str) -> float:
    """Mean over trials of the column's value in each trial's last round."""
    if column not in data:
        raise SchemaError(f"missing column {column!r}")
    t_max = data["t"].max()
    return float(data[column][data["t"] == t_max].mean())


def discover_sweep(sweep_dir) -> list[tuple[float, Path]]:
    """(zeta, per_round.csv) pairs found under a sweep directory."""
    sweep_dir = Path(sweep_dir)
    if not sweep_dir.is_dir():
        raise SchemaError(f"{sweep_dir} is not a directory")
    entries = []
    for sub in sorted(sweep_dir.iterdir()):
        if sub.is_dir() and sub.name.startswith("zeta_"):
            csv_path = sub / "per_round.csv"
            if not csv_path.exists():
                raise SchemaError(f"sweep subdirectory {sub} lacks per_round.csv")
            entries.append((float(sub.name.removeprefix("zeta_")), csv_path))
    if not entries:
        raise SchemaError(f"{sweep_dir} contains no zeta_* subdirectories")
    return sorted(entries)
