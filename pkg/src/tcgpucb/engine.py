"""The decision loop: double-UCB rounds, comparison modes, and trial orchestration.

Each round the fitted posterior scores all arriving arms, the satisfying
estimates go to the good-subgroup oracle, and the reward indices to the
constrained super-arm solver; chosen arms' outcomes are then observed and
the posterior refit from scratch. A threshold-agnostic comparison mode
ranks arms purely by the first-output index, and a satisfy-only mode
maximizes the number of groups whose intersection passes its threshold.

Trials are deterministic given (config, master seed): the master seed
spawns independent substreams for scene generation, outcome noise, the
algorithm, and inducing-point selection, so switching posterior modes
never perturbs the environment draw.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .acquisition import IndexParams, beta_schedule
from .config import ExperimentConfig
from .environments import FLEnvironment, GPSyntheticEnvironment, MovieEnvironment, RoundScene
from .environments.base import Environment
from .environments.movielens import ingest_movielens
from .metrics import RegretLedger, RoundRecord, RunTrace, compute_exact_trace, group_regret_increment, super_regret_increment
from .oracles import EXHAUSTIVE_LIMIT, combine_tables, good_subset_table
from .posterior import ObservationSet, PosteriorState, fit_exact_posterior, fit_sparse_posterior


def _predict_arrays(state: PosteriorState, scene: RoundScene):
    means, stds = state.predict(scene.contexts)
    return means, stds


def _top_k_by(scene: RoundScene, values: dict[int, float], k: int) -> set[int]:
    ranked = sorted(scene.arm_ids, key=lambda m: (-values[m], m))
    return set(ranked[: min(k, len(ranked))])


def _scene_tables(scene: RoundScene, sat_est: dict[int, float], reward_idx: dict[int, float], k: int):
    tables = []
    any_good = False
    for g in sorted(scene.groups, key=lambda g: str(g.id)):
        table = good_subset_table(g, sat_est, reward_idx, max_size=k)
        if table:
            any_good = True
        tables.append((g.id, table))
    return tables, any_good


def _solve(scene: RoundScene, sat_est, reward_idx, k: int):
    """Shared constrained-selection path; returns (super arm, info)."""
    info = {"fallback_unconstrained": False, "cardinality_shortfall": False, "infeasible": False}
    tables, any_good = _scene_tables(scene, sat_est, reward_idx, k)
    if not any_good:
        info["fallback_unconstrained"] = True
        return _top_k_by(scene, reward_idx, k), info
    combos = combine_tables(tables, k)
    attainable = [c for c in range(k + 1) if combos[c] is not None]
    target = max(attainable)
    if target == 0:
        info["infeasible"] = True
        info["fallback_unconstrained"] = True
        return _top_k_by(scene, reward_idx, k), info
    if scene.rule == "ExactlyK" and target < k:
        info["cardinality_shortfall"] = True
    chosen: set[int] = set()
    for subset in combos[target][1].values():
        chosen |= subset
    return chosen, info


def tcgp_ucb_round(state: PosteriorState, scene: RoundScene, params: IndexParams):
    """One thresholded double-UCB round; returns (super arm, diagnostics)."""
    diag = {"no_op": False, "beta": beta_schedule(params, scene.t)}
    if scene.n_arms == 0:
        diag["no_op"] = True
        return set(), diag
    means, stds = _predict_arrays(state, scene)
    sb = np.sqrt(diag["beta"])
    reward_vals = means[:, 0] + sb * stds[:, 0] / (1.0 - params.zeta)
    width2 = sb * stds[:, 1] / params.zeta
    reward_idx = dict(zip(scene.arm_ids, reward_vals.tolist()))
    sat_vals = means[:, 1] + width2
    sat_est = dict(zip(scene.arm_ids, sat_vals.tolist()))
    k = min(scene.budget, scene.n_arms)
    chosen, info = _solve(scene, sat_est, reward_idx, k)
    diag.update(info)
    diag["indices"] = reward_idx
    diag["satisfying_estimates"] = sat_est
    return chosen, diag


def baseline_round(state: PosteriorState, scene: RoundScene, params: IndexParams):
    """Threshold-agnostic comparison: top-K by first-output UCB, unit width scale."""
    diag = {"no_op": False, "beta": beta_schedule(params, scene.t), "satisfying_evaluations": 0}
    if scene.n_arms == 0:
        diag["no_op"] = True
        return set(), diag
    means, stds = _predict_arrays(state, scene)
    vals = means[:, 0] + np.sqrt(diag["beta"]) * stds[:, 0]
    reward_idx = dict(zip(scene.arm_ids, vals.tolist()))
    diag["indices"] = reward_idx
    return _top_k_by(scene, reward_idx, min(scene.budget, scene.n_arms)), diag


def satisfy_only_round(state: PosteriorState, scene: RoundScene, params: IndexParams):
    """Maximize the count of groups passed by index, tie-break by reward index.

    Implemented by rescaling: each good intersection contributes a constant
    that dominates any attainable reward sum, so the scalar knapsack is
    exactly the lexicographic (count, reward) argmax.
    """
    diag = {"no_op": False, "beta": beta_schedule(params, scene.t)}
    if scene.n_arms == 0:
        diag["no_op"] = True
        return set(), diag
    means, stds = _predict_arrays(state, scene)
    sb = np.sqrt(diag["beta"])
    reward_vals = means[:, 0] + sb * stds[:, 0] / (1.0 - params.zeta)
    width2 = sb * stds[:, 1] / params.zeta
    reward_idx = dict(zip(scene.arm_ids, reward_vals.tolist()))
    sat_vals = means[:, 1] + width2
    sat_est = dict(zip(scene.arm_ids, sat_vals.tolist()))
    k = min(scene.budget, scene.n_arms)
    tables, any_good = _scene_tables(scene, sat_est, reward_idx, k)
    if not any_good:
        diag["fallback_unconstrained"] = True
        return _top_k_by(scene, reward_idx, k), diag
    big = 4.0 * (1.0 + sum(abs(v) for v in reward_vals.tolist())) + 1.0
    boosted = [
        (gid, {c: (val + big, subset) for c, (val, subset) in table.items()})
        for gid, table in tables
    ]
    combos = combine_tables(boosted, k)
    attainable = [c for c in range(k + 1) if combos[c] is not None]
    best_c = max(attainable, key=lambda c: combos[c][0])
    chosen: set[int] = set()
    for subset in combos[best_c][1].values():
        chosen |= subset
    diag["fallback_unconstrained"] = False
    return chosen, diag


ROUND_FUNCTIONS = {
    "tcgp": tcgp_ucb_round,
    "baseline": baseline_round,
    "satisfy_only": satisfy_only_round,
}


def benchmark_opt(scene: RoundScene):
    """Feasible benchmark optimum using the environment's true outcomes."""
    if scene.n_arms == 0:
        return 0.0, set(), {"benchmark_exact": True, "benchmark_infeasible": False}
    f1 = dict(zip(scene.arm_ids, scene.true_expected[:, 0].tolist()))
    f2 = dict(zip(scene.arm_ids, scene.true_expected[:, 1].tolist()))
    k = min(scene.budget, scene.n_arms)
    chosen, info = _solve(scene, f2, f1, k)
    exact = all(len(g.member_arm_ids) <= EXHAUSTIVE_LIMIT for g in scene.groups)
    value = sum(f1[m] for m in chosen)
    return value, chosen, {
        "benchmark_exact": exact,
        "benchmark_infeasible": bool(info["infeasible"] or info["cardinality_shortfall"]),
    }


def _group_outcomes(scene: RoundScene, selected: set[int], realized: dict[int, np.ndarray]):
    """(group id, threshold, expected v, realized v) for every touched group."""
    index = {a: i for i, a in enumerate(scene.arm_ids)}
    details = []
    for g in sorted(scene.groups, key=lambda g: str(g.id)):
        inter = sorted(g.member_arm_ids & selected)
        if not inter:
            continue
        expected = g.aggregator.value([scene.true_expected[index[m], 1] for m in inter], inter)
        realized_v = g.aggregator.value([float(realized[m][1]) for m in inter], inter)
        details.append((g.id, g.threshold, float(expected), float(realized_v)))
    return details


@dataclass
class TrialResult:
    trial_index: int
    records: list[RoundRecord]
    ledger: RegretLedger
    round_contexts: list[np.ndarray]
    trace: RunTrace | None = None
    scene_seed: int = 0

    @property
    def horizon(self) -> int:
        return len(self.records)


@dataclass
class TrialFailure:
    trial_index: int
    error: str


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult] = field(default_factory=list)
    failures: list[TrialFailure] = field(default_factory=list)


def build_environment(config: ExperimentConfig, scene_seed: int) -> Environment:
    if config.environment == "fl":
        return FLEnvironment(
            scene_seed=scene_seed, horizon=config.T, budget=config.K, arm_bound=config.M,
            persistent_clients=config.persistent_clients, client_pool_size=config.client_pool_size,
        )
    if config.environment == "movie":
        catalog = None
        if config.movielens_ratings is not None:
            catalog = ingest_movielens(config.movielens_ratings, config.movielens_movies, seed=config.catalog_seed)
        return MovieEnvironment(
            scene_seed=scene_seed, horizon=config.T, catalog=catalog, budget=config.K,
            arm_bound=config.M, threshold_scale=config.threshold_scale, catalog_seed=config.catalog_seed,
        )
    return GPSyntheticEnvironment(
        kernel=config.kernel, scene_seed=scene_seed, horizon=config.T,
        budget=config.K, arm_bound=config.M,
    )


def trial_seed_streams(master_seed: int, n_trials: int, trial_index: int):
    root = np.random.SeedSequence(master_seed)
    trial_ss = root.spawn(n_trials)[trial_index]
    scene_ss, noise_ss, algo_ss, inducing_ss = trial_ss.spawn(4)
    scene_seed = int(scene_ss.generate_state(1)[0])
    inducing_seed = int(inducing_ss.generate_state(1)[0])
    return scene_seed, noise_ss, algo_ss, inducing_seed


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    """Run T rounds for one seeded trial; fully deterministic per (config, index)."""
    scene_seed, noise_ss, _algo_ss, inducing_seed = trial_seed_streams(
        config.master_seed, config.n_trials, trial_index
    )
    env = build_environment(config, scene_seed)
    params = IndexParams(zeta=config.zeta, delta=config.delta, M=config.M)
    round_fn = ROUND_FUNCTIONS[config.algorithm]
    noise_rng = np.random.default_rng(noise_ss)
    obs = ObservationSet(noise_sigma=config.sigma)
    if config.T >= 1:
        obs.context_dim = env.scene(1).contexts.shape[1]
    state = fit_exact_posterior(obs, config.kernel)
    ledger = RegretLedger(zeta=config.zeta)
    records: list[RoundRecord] = []
    round_contexts: list[np.ndarray] = []
    for t in range(1, config.T + 1):
        scene = env.scene(t)
        scene.validate(arm_bound=config.M)
        selected, diag = round_fn(state, scene, params)
        realized = env.realize(scene, sorted(selected), noise_rng)
        opt_value, _opt_set, bench_info = benchmark_opt(scene)
        details = _group_outcomes(scene, selected, realized)
        group_inc = group_regret_increment([(gamma, v_exp) for _gid, gamma, v_exp, _vr in details])
        index = {a: i for i, a in enumerate(scene.arm_ids)}
        achieved = float(sum(scene.true_expected[index[m], 0] for m in selected))
        achieved_realized = float(sum(realized[m][0] for m in selected))
        super_raw, _ = super_regret_increment(1.0, opt_value, achieved)
        satisfied = [1.0 for _gid, gamma, v_exp, _vr in details if v_exp >= gamma]
        fraction = float(len(satisfied) / len(details)) if details else 1.0
        ledger.record_round(group_inc, super_raw, fraction)
        records.append(
            RoundRecord(
                t=t,
                super_arm=tuple(sorted(selected)),
                group_details=details,
                super_reward_expected=achieved,
                super_reward_realized=achieved_realized,
                opt_value=opt_value,
                satisfied_fraction=fraction,
                benchmark_exact=bench_info["benchmark_exact"],
                fallback_unconstrained=bool(diag.get("fallback_unconstrained", False)),
                cardinality_shortfall=bool(diag.get("cardinality_shortfall", False)),
                no_op_round=bool(diag.get("no_op", False)),
                benchmark_infeasible=bench_info["benchmark_infeasible"],
            )
        )
        sel_sorted = sorted(selected)
        round_contexts.append(
            scene.contexts[[index[m] for m in sel_sorted]] if sel_sorted else np.zeros((0, scene.contexts.shape[1]))
        )
        if sel_sorted:
            for m in sel_sorted:
                obs.append(scene.contexts[index[m]], realized[m])
            if config.posterior_mode == "exact":
                state = fit_exact_posterior(obs, config.kernel)
            else:
                state = fit_sparse_posterior(obs, config.kernel, s=config.sparse_s, seed=inducing_seed)
    trace = None
    if config.bound_diagnostics:
        trace = compute_exact_trace(config.kernel, config.sigma, round_contexts)
    return TrialResult(
        trial_index=trial_index,
        records=records,
        ledger=ledger,
        round_contexts=round_contexts,
        trace=trace,
        scene_seed=scene_seed,
    )


def _run_trial_star(args) -> TrialResult:
    return run_trial(*args)


def trial_parallelism() -> int:
    raw = os.environ.get("TCGP_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute all trials, tolerating individual failures."""
    result = ExperimentResult(config=config)
    workers = min(trial_parallelism(), config.n_trials)
    if workers <= 1:
        for i in range(config.n_trials):
            try:
                result.trials.append(run_trial(config, i))
            except Exception as exc:  # structured failure, aggregation continues
                result.failures.append(TrialFailure(i, f"{type(exc).__name__}: {exc}"))
        return result
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {i: pool.submit(run_trial, config, i) for i in range(config.n_trials)}
        for i in range(config.n_trials):
            try:
                result.trials.append(futures[i].result())
            except Exception as exc:
                result.failures.append(TrialFailure(i, f"{type(exc).__name__}: {exc}"))
    return result
