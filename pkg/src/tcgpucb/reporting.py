"""Result serialization: per-round CSV, per-round aggregates, metadata, traces.

Floats are written with `repr`, the shortest round-trip form, so repeated
runs of the same seeded experiment produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .engine import ExperimentResult, TrialResult
from .errors import InputError

PER_ROUND_COLUMNS = [
    "trial", "t", "super_reward_expected", "opt_value", "super_regret",
    "group_regret", "total_regret", "satisfied_fraction",
    "cum_super_regret", "cum_group_regret", "cum_total_regret",
]
METRIC_COLUMNS = PER_ROUND_COLUMNS[2:]


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def trial_rows(trial: TrialResult) -> list[list[float]]:
    ledger = trial.ledger
    cum_super = ledger.cumulative("super")
    cum_group = ledger.cumulative("group")
    cum_total = ledger.cumulative("total")
    totals = ledger.total_increments()
    rows = []
    for i, rec in enumerate(trial.records):
        rows.append([
            trial.trial_index, rec.t, rec.super_reward_expected, rec.opt_value,
            ledger.super_increments_raw[i], ledger.group_increments[i], float(totals[i]),
            rec.satisfied_fraction, float(cum_super[i]), float(cum_group[i]), float(cum_total[i]),
        ])
    return rows


def write_per_round_csv(result: ExperimentResult, path: Path) -> None:
    lines = [",".join(PER_ROUND_COLUMNS)]
    for trial in sorted(result.trials, key=lambda tr: tr.trial_index):
        for row in trial_rows(trial):
            lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def aggregate_table(result: ExperimentResult) -> tuple[list[str], list[list[float]]]:
    """Per-round mean and population std of every metric column across trials."""
    if not result.trials:
        raise InputError("no successful trials to aggregate")
    horizons = {tr.horizon for tr in result.trials}
    if len(horizons) != 1:
        raise InputError(f"trials disagree on horizon: {sorted(horizons)}")
    t_max = horizons.pop()
    per_trial = np.array([[row[2:] for row in trial_rows(tr)] for tr in sorted(result.trials, key=lambda tr: tr.trial_index)])
    header = ["t"]
    for col in METRIC_COLUMNS:
        header += [f"{col}_mean", f"{col}_std"]
    rows = []
    for ti in range(t_max):
        row: list[float] = [ti + 1]
        for ci in range(len(METRIC_COLUMNS)):
            vals = per_trial[:, ti, ci]
            row += [float(vals.mean()), float(vals.std(ddof=0))]
        rows.append(row)
    return header, rows


def write_aggregate_csv(result: ExperimentResult, path: Path) -> None:
    header, rows = aggregate_table(result)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_meta(result: ExperimentResult, path: Path) -> None:
    trials = sorted(result.trials, key=lambda tr: tr.trial_index)
    flags = {
        "fallback_rounds": sum(r.fallback_unconstrained for tr in trials for r in tr.records),
        "benchmark_approximate_rounds": sum((not r.benchmark_exact) for tr in trials for r in tr.records),
        "benchmark_infeasible_rounds": sum(r.benchmark_infeasible for tr in trials for r in tr.records),
        "cardinality_shortfall_rounds": sum(r.cardinality_shortfall for tr in trials for r in tr.records),
        "no_op_rounds": sum(r.no_op_round for tr in trials for r in tr.records),
    }
    meta = {
        "package_version": __version__,
        "config": result.config.to_json_dict(),
        "trial_scene_seeds": {tr.trial_index: tr.scene_seed for tr in trials},
        "n_trials_succeeded": len(trials),
        "failures": [{"trial": f.trial_index, "error": f.error} for f in result.failures],
        "flags": flags,
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_trace(result: ExperimentResult, path: Path) -> None:
    trials = [tr for tr in result.trials if tr.trace is not None]
    if not trials:
        return
    payload = {
        "sigma": result.config.sigma,
        "kernel": result.config.to_json_dict() | {},
        "trials": [
            {
                "trial": tr.trial_index,
                "round_contexts": [z.tolist() for z in tr.trace.round_contexts],
                "round_variances": [v.tolist() for v in tr.trace.round_variances],
                "round_top_eigs": [e.tolist() for e in tr.trace.round_top_eigs],
                "round_info_increments": [i.tolist() for i in tr.trace.round_info_increments],
            }
            for tr in sorted(trials, key=lambda tr: tr.trial_index)
        ],
    }
    payload["kernel"] = {
        k: payload["kernel"][k] for k in ("kernel1", "kernel2", "cross_correlation")
    }
    path.write_text(json.dumps(payload) + "\n")


def write_results(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write per_round.csv, aggregate.csv, run_meta.json and (optionally) trace.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "per_round": out / "per_round.csv",
        "aggregate": out / "aggregate.csv",
        "meta": out / "run_meta.json",
    }
    write_per_round_csv(result, paths["per_round"])
    write_aggregate_csv(result, paths["aggregate"])
    write_meta(result, paths["meta"])
    if any(tr.trace is not None for tr in result.trials):
        paths["trace"] = out / "trace.json"
        write_trace(result, paths["trace"])
    return paths
