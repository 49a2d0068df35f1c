"""Command-line surface: run, sweep-zeta, check-bounds, ingest.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .acquisition import IndexParams, beta_schedule
from .config import parse_config
from .engine import run_experiment
from .errors import IngestionError, ValidationError
from .kernels import KernelSpec, TwoOutputKernelSpec
from .metrics import (
    BoundSpec,
    RunTrace,
    empirical_gamma_bar,
    info_gain_lower_check,
    theoretical_bound,
    trace_lambda_star,
)
from .reporting import write_results


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcgp", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--out", type=Path, default=None, help="output directory (default: config output_dir)")

    p_sweep = sub.add_parser("sweep-zeta", help="run the experiment once per trade-off value")
    p_sweep.add_argument("config", type=Path)
    p_sweep.add_argument("--values", type=float, nargs="+", required=True)
    p_sweep.add_argument("--out", type=Path, default=None)

    p_check = sub.add_parser("check-bounds", help="verify regret-bound diagnostics for a finished run")
    p_check.add_argument("run_dir", type=Path)

    p_ingest = sub.add_parser("ingest", help="parse and filter a ratings dataset")
    p_ingest.add_argument("ratings", type=Path)
    p_ingest.add_argument("movies", type=Path)
    p_ingest.add_argument("--seed", type=int, default=0)
    p_ingest.add_argument("--out", type=Path, default=None)
    return parser


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    result = run_experiment(config)
    if not result.trials:
        for f in result.failures:
            print(f"trial {f.trial_index} failed: {f.error}", file=sys.stderr)
        print("all trials failed", file=sys.stderr)
        return 2
    for f in result.failures:
        print(f"warning: trial {f.trial_index} failed: {f.error}", file=sys.stderr)
    out = args.out if args.out is not None else Path(config.output_dir)
    paths = write_results(result, out)
    final = result.trials[0].ledger
    print(f"wrote {paths['per_round']} ({len(result.trials)} trials x {config.T} rounds)")
    if len(final) > 0:
        cg = np.mean([tr.ledger.cumulative("group")[-1] for tr in result.trials])
        cs = np.mean([tr.ledger.cumulative("super")[-1] for tr in result.trials])
        print(f"mean final cumulative regret: group={cg:.4f} super={cs:.4f}")
    return 0


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    base_out = args.out if args.out is not None else Path(config.output_dir) / "zeta_sweep"
    base_out.mkdir(parents=True, exist_ok=True)
    summary_lines = ["zeta,cum_group_regret_mean,cum_super_regret_mean,cum_total_regret_mean"]
    for zeta in args.values:
        if not 0.0 < zeta < 1.0:
            raise ValidationError(f"sweep value {zeta} outside (0, 1)")
        cfg = config.replaced(zeta=float(zeta))
        result = run_experiment(cfg)
        if not result.trials:
            print(f"zeta={zeta}: all trials failed", file=sys.stderr)
            return 2
        sub = base_out / f"zeta_{zeta}"
        write_results(result, sub)
        cg = float(np.mean([tr.ledger.cumulative("group")[-1] for tr in result.trials]))
        cs = float(np.mean([tr.ledger.cumulative("super")[-1] for tr in result.trials]))
        ct = float(np.mean([tr.ledger.cumulative("total")[-1] for tr in result.trials]))
        summary_lines.append(f"{zeta!r},{cg!r},{cs!r},{ct!r}")
        print(f"zeta={zeta}: group={cg:.4f} super={cs:.4f} -> {sub}")
    (base_out / "sweep_summary.csv").write_text("\n".join(summary_lines) + "\n")
    return 0


def _kernel_from_meta(kd: dict) -> KernelSpec:
    return KernelSpec(
        family=kd["family"], lengthscale=kd["lengthscale"], variance=kd["variance"],
        matern_nu=kd.get("matern_nu", 2.5),
    )


def _cmd_check_bounds(args) -> int:
    run_dir = Path(args.run_dir)
    trace_path = run_dir / "trace.json"
    meta_path = run_dir / "run_meta.json"
    if not trace_path.exists() or not meta_path.exists():
        raise ValidationError(
            f"{run_dir} lacks trace.json/run_meta.json; run with bound_diagnostics enabled"
        )
    meta = json.loads(meta_path.read_text())
    payload = json.loads(trace_path.read_text())
    cfg = meta["config"]
    kernel = TwoOutputKernelSpec(
        output1=_kernel_from_meta(payload["kernel"]["kernel1"]),
        output2=_kernel_from_meta(payload["kernel"]["kernel2"]),
        cross_correlation=payload["kernel"]["cross_correlation"],
    )
    sigma = payload["sigma"]
    params = IndexParams(zeta=cfg["zeta"], delta=cfg["delta"], M=cfg["M"])
    all_ok = True
    for entry in payload["trials"]:
        trace = RunTrace(
            kernel=kernel,
            sigma=sigma,
            round_contexts=[np.asarray(z).reshape(len(z), -1) if len(z) else np.zeros((0, 1)) for z in entry["round_contexts"]],
            round_variances=[np.asarray(v).reshape(len(v), -1) if len(v) else np.zeros((0, 2)) for v in entry["round_variances"]],
            round_top_eigs=[np.asarray(e) for e in entry["round_top_eigs"]],
            round_info_increments=[np.asarray(i) for i in entry["round_info_increments"]],
        )
        T = len(trace.round_contexts)
        gbar, _per = empirical_gamma_bar(trace)
        lam = trace_lambda_star(trace)
        spec = BoundSpec(B=1.0, B_prime=1.0, lambda_star=lam, K=cfg["K"], sigma=sigma, delta=cfg["delta"])
        bound = theoretical_bound(spec, beta_schedule(params, max(T, 1)), cfg["K"], max(T, 1), max(gbar, 1e-12))
        lemma_ok, slack = info_gain_lower_check(trace)
        realized = _realized_total_regret(run_dir, entry["trial"], cfg["zeta"])
        bound_ok = realized <= bound
        all_ok &= bound_ok and lemma_ok
        print(
            f"trial {entry['trial']}: total_regret={realized:.3f} bound={bound:.3f} "
            f"[{'PASS' if bound_ok else 'FAIL'}]  info-gain lower bound slack={slack:.4f} "
            f"[{'PASS' if lemma_ok else 'FAIL'}]"
        )
    print("bound diagnostics:", "PASS" if all_ok else "FAIL")
    return 0 if all_ok else 2


def _realized_total_regret(run_dir: Path, trial: int, zeta: float) -> float:
    lines = (run_dir / "per_round.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    idx_trial = header.index("trial")
    idx_ct = header.index("cum_total_regret")
    value = 0.0
    for line in lines[1:]:
        parts = line.split(",")
        if int(parts[idx_trial]) == trial:
            value = float(parts[idx_ct])
    return value


def _cmd_ingest(args) -> int:
    from .environments.movielens import ingest_movielens

    catalog = ingest_movielens(args.ratings, args.movies, seed=args.seed)
    n_ratings = sum(len(r) for r in catalog.user_ratings.values())
    print(
        f"catalog: {len(catalog.user_ids)} users, {len(catalog.movie_ids)} movies, "
        f"{n_ratings} ratings, {catalog.skipped_rows} rows skipped"
    )
    if args.out is not None:
        payload = {
            "users": {
                str(u): {"location": catalog.user_location[u], "n_ratings": len(catalog.user_ratings[u])}
                for u in catalog.user_ids
            },
            "n_movies": len(catalog.movie_ids),
            "skipped_rows": catalog.skipped_rows,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage()
        return 1
    handlers = {
        "run": _cmd_run,
        "sweep-zeta": _cmd_sweep,
        "check-bounds": _cmd_check_bounds,
        "ingest": _cmd_ingest,
    }
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
