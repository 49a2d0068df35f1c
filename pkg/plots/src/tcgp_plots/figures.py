"""The three figure builders: regret curves, satisfaction, trade-off scatter.

Each builder returns the matplotlib figure so callers (and tests) can
inspect the plotted series; the CLI saves them as PNG.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .readers import discover_sweep, final_cumulative, load_per_round, mean_std_by_round


def _label_for(path: Path, label: str | None) -> str:
    return label if label is not None else Path(path).resolve().parent.name


def plot_regret_curves(inputs: list[tuple[str, str | None]], out_image=None):
    """Cumulative super-arm and group regret vs round, one pair of curves per input run."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, label in inputs:
        data = load_per_round(path)
        name = _label_for(path, label)
        for column, style in (("cum_super_regret", "-"), ("cum_group_regret", "--")):
            rounds, mean, std = mean_std_by_round(data, column)
            pretty = "super" if column == "cum_super_regret" else "group"
            line, = ax.plot(rounds, mean, style, label=f"{name} {pretty}")
            ax.fill_between(rounds, mean - std, mean + std, alpha=0.2, color=line.get_color())
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.legend()
    fig.tight_layout()
    if out_image is not None:
        fig.savefig(out_image, dpi=150)
    return fig


def plot_satisfaction(inputs: list[tuple[str, str | None]], out_image=None):
    """Fraction of touched groups that met their threshold, per round, with std band."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, label in inputs:
        data = load_per_round(path)
        rounds, mean, std = mean_std_by_round(data, "satisfied_fraction")
        line, = ax.plot(rounds, mean, label=_label_for(path, label))
        ax.fill_between(rounds, mean - std, mean + std, alpha=0.2, color=line.get_color())
        ax.set_xlim(rounds.min(), rounds.max())
    ax.set_xlabel("round")
    ax.set_ylabel("satisfied group fraction")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    if out_image is not None:
        fig.savefig(out_image, dpi=150)
    return fig


def plot_zeta_tradeoff(sweep_dir, out_image=None):
    """Final cumulative group and super-arm regret against the trade-off weight."""
    entries = discover_sweep(sweep_dir)
    zetas = [z for z, _ in entries]
    finals_g, finals_s = [], []
    for _, path in entries:
        data = load_per_round(path)
        finals_g.append(final_cumulative(data, "cum_group_regret"))
        finals_s.append(final_cumulative(data, "cum_super_regret"))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(zetas, finals_s, "o-", label="super-arm regret")
    ax.plot(zetas, finals_g, "s--", label="group regret")
    ax.set_xlabel("trade-off weight")
    ax.set_ylabel("final cumulative regret")
    ax.legend()
    fig.tight_layout()
    if out_image is not None:
        fig.savefig(out_image, dpi=150)
    return fig
