"""Experiment configuration: strict JSON schema with per-environment defaults.

Default values follow the experiment setups: the task-allocation
environment runs 100 rounds over 8 trials with a 10-point sparse posterior
and RBF kernels at unit scale; the recommendation environment runs 200
rounds over 20 trials with budget 20 and Matern kernels; the synthetic GP
environment uses the exponential-norm kernel with lengthscale 0.5 and
noise 0.1. Everywhere: zeta = 0.5, delta = 0.05.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .kernels import KernelSpec, TwoOutputKernelSpec

ENVIRONMENTS = ("fl", "movie", "gp_appendix")
ALGORITHMS = ("tcgp", "baseline", "satisfy_only")
POSTERIOR_MODES = ("exact", "sparse")

_ENV_DEFAULTS: dict[str, dict] = {
    "fl": dict(
        T=100, n_trials=8, K=60, sigma=0.05, M=600,
        posterior_mode="sparse", sparse_s=10,
        kernel=dict(family="RBF", lengthscale=1.0, variance=1.0),
        bound_diagnostics=True,
    ),
    "movie": dict(
        T=200, n_trials=20, K=20, sigma=0.05, M=3000,
        posterior_mode="sparse", sparse_s=20,
        kernel=dict(family="Matern", lengthscale=1.0, variance=1.0, matern_nu=2.5),
        bound_diagnostics=False,
    ),
    "gp_appendix": dict(
        T=100, n_trials=2, K=10, sigma=0.1, M=600,
        posterior_mode="exact", sparse_s=10,
        kernel=dict(family="ExpNorm", lengthscale=0.5, variance=1.0),
        bound_diagnostics=False,
    ),
}

_KERNEL_KEYS = {"family", "lengthscale", "variance", "matern_nu"}
_TOP_KEYS = {
    "environment", "zeta", "delta", "sigma", "K", "T", "n_trials", "master_seed",
    "posterior_mode", "sparse_s", "algorithm", "kernel1", "kernel2",
    "cross_correlation", "movielens_ratings", "movielens_movies", "output_dir",
    "M", "persistent_clients", "client_pool_size", "threshold_scale",
    "catalog_seed", "bound_diagnostics",
}


@dataclass(frozen=True)
class ExperimentConfig:
    environment: str
    zeta: float = 0.5
    delta: float = 0.05
    sigma: float = 0.05
    K: int = 20
    T: int = 100
    n_trials: int = 8
    master_seed: int = 0
    posterior_mode: str = "sparse"
    sparse_s: int = 10
    algorithm: str = "tcgp"
    kernel: TwoOutputKernelSpec = field(default_factory=TwoOutputKernelSpec)
    M: int = 600
    persistent_clients: bool = True
    client_pool_size: int = 100
    threshold_scale: float = 1.4
    catalog_seed: int = 2024
    movielens_ratings: str | None = None
    movielens_movies: str | None = None
    output_dir: str = "runs"
    bound_diagnostics: bool = False

    def replaced(self, **kwargs) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, **kwargs)

    def to_json_dict(self) -> dict:
        def kernel_dict(k: KernelSpec) -> dict:
            d = {"family": k.family, "lengthscale": k.lengthscale, "variance": k.variance}
            if k.family == "Matern":
                d["matern_nu"] = k.matern_nu
            return d

        return {
            "environment": self.environment,
            "zeta": self.zeta,
            "delta": self.delta,
            "sigma": self.sigma,
            "K": self.K,
            "T": self.T,
            "n_trials": self.n_trials,
            "master_seed": self.master_seed,
            "posterior_mode": self.posterior_mode,
            "sparse_s": self.sparse_s,
            "algorithm": self.algorithm,
            "kernel1": kernel_dict(self.kernel.output1),
            "kernel2": kernel_dict(self.kernel.output2),
            "cross_correlation": self.kernel.cross_correlation,
            "M": self.M,
            "persistent_clients": self.persistent_clients,
            "client_pool_size": self.client_pool_size,
            "threshold_scale": self.threshold_scale,
            "catalog_seed": self.catalog_seed,
            "movielens_ratings": self.movielens_ratings,
            "movielens_movies": self.movielens_movies,
            "output_dir": self.output_dir,
            "bound_diagnostics": self.bound_diagnostics,
        }


def _build_kernel(raw1: dict | None, raw2: dict | None, rho: float, env_default: dict, errors: list[str]):
    def one(raw: dict | None, label: str) -> KernelSpec | None:
        base = dict(env_default)
        if raw is not None:
            unknown = set(raw) - _KERNEL_KEYS
            if unknown:
                errors.append(f"{label}: unknown keys {sorted(unknown)}")
                return None
            base.update(raw)
        try:
            return KernelSpec(
                family=base.get("family", "RBF"),
                lengthscale=float(base.get("lengthscale", 1.0)),
                variance=float(base.get("variance", 1.0)),
                matern_nu=float(base.get("matern_nu", 2.5)),
            )
        except (ValueError, TypeError) as exc:
            errors.append(f"{label}: {exc}")
            return None

    k1 = one(raw1, "kernel1")
    k2 = one(raw2, "kernel2")
    if k1 is None or k2 is None:
        return None
    try:
        return TwoOutputKernelSpec(output1=k1, output2=k2, cross_correlation=float(rho))
    except (ValueError, TypeError) as exc:
        errors.append(f"kernel: {exc}")
        return None


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a raw mapping; raises ValidationError listing every violation."""
    errors: list[str] = []
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown keys {sorted(unknown)}")
    env = raw.get("environment")
    if env not in ENVIRONMENTS:
        errors.append(f"environment must be one of {ENVIRONMENTS}, got {env!r}")
        raise ValidationError("; ".join(errors))
    defaults = _ENV_DEFAULTS[env]

    def take(key, fallback, cast):
        value = raw.get(key, defaults.get(key, fallback))
        try:
            return cast(value)
        except (ValueError, TypeError):
            errors.append(f"{key}: cannot interpret {value!r}")
            return fallback

    zeta = take("zeta", 0.5, float)
    delta = take("delta", 0.05, float)
    sigma = take("sigma", defaults["sigma"], float)
    K = take("K", defaults["K"], int)
    T = take("T", defaults["T"], int)
    n_trials = take("n_trials", defaults["n_trials"], int)
    master_seed = take("master_seed", 0, int)
    posterior_mode = take("posterior_mode", defaults["posterior_mode"], str)
    sparse_s = take("sparse_s", defaults["sparse_s"], int)
    algorithm = take("algorithm", "tcgp", str)
    M = take("M", defaults["M"], int)
    persistent_clients = take("persistent_clients", True, bool)
    client_pool_size = take("client_pool_size", 100, int)
    threshold_scale = take("threshold_scale", 1.4, float)
    catalog_seed = take("catalog_seed", 2024, int)
    bound_diagnostics = take("bound_diagnostics", defaults["bound_diagnostics"], bool)
    output_dir = take("output_dir", f"runs/{env}", str)

    if not 0.0 < zeta < 1.0:
        errors.append(f"zeta must lie strictly inside (0, 1), got {zeta}")
    if not 0.0 < delta < 1.0:
        errors.append(f"delta must lie strictly inside (0, 1), got {delta}")
    if sigma <= 0:
        errors.append("sigma must be positive")
    if K < 1:
        errors.append("K must be >= 1")
    if T < 1:
        errors.append("T must be >= 1")
    if n_trials < 1:
        errors.append("n_trials must be >= 1")
    if M < 1:
        errors.append("M must be >= 1")
    if posterior_mode not in POSTERIOR_MODES:
        errors.append(f"posterior_mode must be one of {POSTERIOR_MODES}")
    if posterior_mode == "sparse" and sparse_s < 1:
        errors.append("sparse_s must be >= 1 when posterior_mode is sparse")
    if algorithm not in ALGORITHMS:
        errors.append(f"algorithm must be one of {ALGORITHMS}")
    if (raw.get("movielens_ratings") is None) != (raw.get("movielens_movies") is None):
        errors.append("movielens_ratings and movielens_movies must be given together")

    kernel = _build_kernel(
        raw.get("kernel1"), raw.get("kernel2"), raw.get("cross_correlation", 0.0),
        defaults["kernel"], errors,
    )
    if errors:
        raise ValidationError("; ".join(errors))
    return ExperimentConfig(
        environment=env, zeta=zeta, delta=delta, sigma=sigma, K=K, T=T,
        n_trials=n_trials, master_seed=master_seed, posterior_mode=posterior_mode,
        sparse_s=sparse_s, algorithm=algorithm, kernel=kernel, M=M,
        persistent_clients=persistent_clients, client_pool_size=client_pool_size,
        threshold_scale=threshold_scale, catalog_seed=catalog_seed,
        movielens_ratings=raw.get("movielens_ratings"),
        movielens_movies=raw.get("movielens_movies"),
        output_dir=output_dir, bound_diagnostics=bound_diagnostics,
    )


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a JSON object")
    return config_from_dict(raw)
