"""Two-output GP posterior: exact conditioning and a sparse inducing-point fit.

The exact posterior conditions jointly on all observed (context, outcome)
pairs. The sparse fit is the variational free-energy (projected-process)
posterior anchored on ``s`` inducing contexts; its cost per fit is
O(s^2 N) instead of O(N^3). Both produce the same ``PosteriorState``
interface: per-output predictive means, standard deviations, and
covariances over query contexts.

When the two outputs are independent (cross_correlation == 0) fits and
predictions run per output on N x N blocks; the coupled case assembles the
interleaved 2N x 2N system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import InputError, NumericalError
from .kernels import TwoOutputKernelSpec, joint_diag, joint_gram, output_diag, output_gram

BASE_JITTER = 1e-8
MAX_JITTER = 1e-4


def chol_with_jitter(M: np.ndarray, base: float = BASE_JITTER, maximum: float = MAX_JITTER) -> np.ndarray:
    """Lower Cholesky of M + jitter*I, escalating jitter x10 up to `maximum`."""
    jitter = base
    eye = np.eye(M.shape[0])
    last_exc: Exception | None = None
    while jitter <= maximum:
        try:
            return cholesky(M + jitter * eye, lower=True) if jitter > 0 else cholesky(M, lower=True)
        except np.linalg.LinAlgError as exc:
            last_exc = exc
            jitter = BASE_JITTER if jitter == 0.0 else jitter * 10.0
    raise NumericalError(
        f"Cholesky failed for {M.shape[0]}x{M.shape[0]} matrix even with jitter {maximum}"
    ) from last_exc


class ObservationSet:
    """Append-only record of observed contexts and two-dimensional outcomes."""

    def __init__(self, noise_sigma: float, context_dim: int | None = None):
        if not noise_sigma > 0:
            raise InputError("noise_sigma must be positive")
        self.noise_sigma = float(noise_sigma)
        self.context_dim = context_dim
        self._contexts: list[np.ndarray] = []
        self._outcomes: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._contexts)

    def append(self, context, outcome) -> None:
        c = np.atleast_1d(np.asarray(context, dtype=float))
        r = np.asarray(outcome, dtype=float)
        if r.shape != (2,):
            raise InputError(f"outcome must be a 2-vector, got shape {r.shape}")
        if self.context_dim is None:
            self.context_dim = c.shape[0]
        elif c.shape[0] != self.context_dim:
            raise InputError(f"context dimension {c.shape[0]} != {self.context_dim}")
        self._contexts.append(c)
        self._outcomes.append(r)

    def extend(self, contexts, outcomes) -> None:
        for c, r in zip(contexts, outcomes):
            self.append(c, r)

    def contexts_array(self) -> np.ndarray:
        if not self._contexts:
            return np.zeros((0, self.context_dim or 1))
        return np.vstack(self._contexts)

    def outcomes_array(self) -> np.ndarray:
        if not self._outcomes:
            return np.zeros((0, 2))
        return np.vstack(self._outcomes)


@dataclass
class _OutputFit:
    """Per-output factorized fit (exact or sparse), independent-output case."""

    kind: str  # "prior" | "exact" | "sparse"
    X: np.ndarray | None = None
    L: np.ndarray | None = None  # exact: chol(K + sig^2 I)
    alpha: np.ndarray | None = None  # exact: (K + sig^2 I)^-1 y
    Z: np.ndarray | None = None  # sparse inducing contexts
    Lu: np.ndarray | None = None  # sparse: chol(Kuu)
    LB: np.ndarray | None = None  # sparse: chol(I + A A^T)
    c: np.ndarray | None = None  # sparse: LB^-1 A y / sigma


@dataclass
class PosteriorState:
    """Fitted two-output posterior; immutable after construction."""

    mode: str  # "exact" | "sparse"
    kernel: TwoOutputKernelSpec
    noise_sigma: float
    observation_count: int
    inducing_points: np.ndarray | None = None
    fallback_exact: bool = False
    _fits: list[_OutputFit] | None = None  # independent-output path
    _joint: dict | None = field(default=None, repr=False)  # coupled path

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior means and standard deviations at query contexts.

        Returns arrays of shape (n, 2); entry j is output j's posterior
        mean / sqrt of posterior variance given all observations.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if self._joint is not None:
            return self._predict_joint(X)
        means = np.zeros((X.shape[0], 2))
        variances = np.zeros((X.shape[0], 2))
        for j in (0, 1):
            m, v = self._predict_output(X, j, want_cov=False)
            means[:, j] = m
            variances[:, j] = v
        return means, np.sqrt(np.maximum(variances, 0.0))

    def predict_cov(self, X, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean vector and full covariance for one output."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if self._joint is not None:
            means, cov = self._predict_joint_cov(X)
            return means[:, j], cov[j::2, j::2]
        m, C = self._predict_output(X, j, want_cov=True)
        return m, C

    # -- independent-output path -------------------------------------------------

    def _predict_output(self, X, j, want_cov):
        fit = self._fits[j]
        if fit.kind == "prior":
            if want_cov:
                return np.zeros(X.shape[0]), output_gram(self.kernel, X, X, j=j)
            return np.zeros(X.shape[0]), output_diag(self.kernel, X, j=j)
        if fit.kind == "exact":
            Ks = output_gram(self.kernel, X, fit.X, j=j)  # (n, N)
            mean = Ks @ fit.alpha
            V = solve_triangular(fit.L, Ks.T, lower=True)  # (N, n)
            if want_cov:
                Kss = output_gram(self.kernel, X, X, j=j)
                return mean, Kss - V.T @ V
            var = output_diag(self.kernel, X, j=j) - np.sum(V * V, axis=0)
            return mean, var
        # sparse (variational free-energy predictive)
        Kus = output_gram(self.kernel, fit.Z, X, j=j)  # (s, n)
        tmp1 = solve_triangular(fit.Lu, Kus, lower=True)
        tmp2 = solve_triangular(fit.LB, tmp1, lower=True)
        mean = tmp2.T @ fit.c
        if want_cov:
            Kss = output_gram(self.kernel, X, X, j=j)
            return mean, Kss - tmp1.T @ tmp1 + tmp2.T @ tmp2
        var = output_diag(self.kernel, X, j=j) - np.sum(tmp1 * tmp1, axis=0) + np.sum(tmp2 * tmp2, axis=0)
        return mean, var

    # -- coupled (interleaved joint) path ----------------------------------------

    def _predict_joint(self, X):
        means, cov = self._predict_joint_cov(X, diag_only=True)
        return means, np.sqrt(np.maximum(cov, 0.0))

    def _predict_joint_cov(self, X, diag_only=False):
        J = self._joint
        n = X.shape[0]
        if J["kind"] == "prior":
            means = np.zeros((n, 2))
            if diag_only:
                return means, joint_diag(self.kernel, X).reshape(n, 2)
            return means, joint_gram(self.kernel, X)
        if J["kind"] == "exact":
            Ks = joint_gram(self.kernel, X, J["X"])  # (2n, 2N)
            mean_flat = Ks @ J["alpha"]
            V = solve_triangular(J["L"], Ks.T, lower=True)
            if diag_only:
                var = joint_diag(self.kernel, X) - np.sum(V * V, axis=0)
                return mean_flat.reshape(n, 2), var.reshape(n, 2)
            Kss = joint_gram(self.kernel, X)
            return mean_flat.reshape(n, 2), Kss - V.T @ V
        # sparse
        Kus = joint_gram(self.kernel, J["Z"], X)  # (2s, 2n)
        tmp1 = solve_triangular(J["Lu"], Kus, lower=True)
        tmp2 = solve_triangular(J["LB"], tmp1, lower=True)
        mean_flat = tmp2.T @ J["c"]
        if diag_only:
            var = joint_diag(self.kernel, X) - np.sum(tmp1 * tmp1, axis=0) + np.sum(tmp2 * tmp2, axis=0)
            return mean_flat.reshape(n, 2), var.reshape(n, 2)
        Kss = joint_gram(self.kernel, X)
        return mean_flat.reshape(n, 2), Kss - tmp1.T @ tmp1 + tmp2.T @ tmp2


def _prior_state(kernel, noise_sigma) -> PosteriorState:
    if kernel.cross_correlation == 0.0:
        fits = [_OutputFit(kind="prior"), _OutputFit(kind="prior")]
        return PosteriorState("exact", kernel, noise_sigma, 0, _fits=fits)
    return PosteriorState("exact", kernel, noise_sigma, 0, _joint={"kind": "prior"})


def fit_exact_posterior(obs: ObservationSet, kernel: TwoOutputKernelSpec) -> PosteriorState:
    """Condition the two-output prior on every observation in `obs`."""
    N = len(obs)
    if N == 0:
        return _prior_state(kernel, obs.noise_sigma)
    X = obs.contexts_array()
    Y = obs.outcomes_array()
    sig2 = obs.noise_sigma**2
    if kernel.cross_correlation == 0.0:
        fits = []
        for j in (0, 1):
            K = output_gram(kernel, X, X, j=j)
            L = chol_with_jitter(K + sig2 * np.eye(N), base=0.0 if sig2 > 0 else BASE_JITTER)
            alpha = solve_triangular(L.T, solve_triangular(L, Y[:, j], lower=True), lower=False)
            fits.append(_OutputFit(kind="exact", X=X, L=L, alpha=alpha))
        return PosteriorState("exact", kernel, obs.noise_sigma, N, _fits=fits)
    K = joint_gram(kernel, X)
    L = chol_with_jitter(K + sig2 * np.eye(2 * N), base=0.0 if sig2 > 0 else BASE_JITTER)
    y = Y.reshape(-1)
    alpha = solve_triangular(L.T, solve_triangular(L, y, lower=True), lower=False)
    return PosteriorState("exact", kernel, obs.noise_sigma, N, _joint={"kind": "exact", "X": X, "L": L, "alpha": alpha})


def select_inducing_points(X: np.ndarray, s: int) -> np.ndarray:
    """Pick `s` spread-out contexts by farthest-point traversal.

    Duplicates are collapsed first so the inducing Gram stays well
    conditioned. The walk starts from the lexicographically smallest
    context and is fully deterministic.
    """
    uniq = np.unique(X, axis=0)
    if uniq.shape[0] <= s:
        return uniq
    chosen = [0]  # np.unique sorts lexicographically
    d2 = ((uniq - uniq[0]) ** 2).sum(axis=1)
    for _ in range(s - 1):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((uniq - uniq[nxt]) ** 2).sum(axis=1))
    return uniq[np.sort(chosen)]


def fit_sparse_posterior(
    obs: ObservationSet, kernel: TwoOutputKernelSpec, s: int, seed: int = 0
) -> PosteriorState:
    """Variational free-energy sparse fit on `s` inducing contexts.

    Falls back to the exact fit (with `fallback_exact` set) when s >= N.
    The `seed` argument is accepted for interface stability; the
    coverage-greedy inducing rule is deterministic and does not consume it.
    """
    if s < 1:
        raise InputError("s must be >= 1")
    N = len(obs)
    if N == 0:
        return _prior_state(kernel, obs.noise_sigma)
    X = obs.contexts_array()
    if s >= N:
        st = fit_exact_posterior(obs, kernel)
        st.fallback_exact = True
        return st
    Z = select_inducing_points(X, s)
    Y = obs.outcomes_array()
    sigma = obs.noise_sigma
    if kernel.cross_correlation == 0.0:
        fits = []
        for j in (0, 1):
            fits.append(_fit_sparse_output(kernel, X, Y[:, j], Z, sigma, j))
        return PosteriorState("sparse", kernel, sigma, N, inducing_points=Z, _fits=fits)
    Kuu = joint_gram(kernel, Z)
    Kuf = joint_gram(kernel, Z, X)
    Lu = chol_with_jitter(Kuu)
    A = solve_triangular(Lu, Kuf, lower=True) / sigma
    B = np.eye(A.shape[0]) + A @ A.T
    LB = chol_with_jitter(B, base=0.0)
    c = solve_triangular(LB, A @ Y.reshape(-1), lower=True) / sigma
    return PosteriorState(
        "sparse", kernel, sigma, N, inducing_points=Z,
        _joint={"kind": "sparse", "Z": Z, "Lu": Lu, "LB": LB, "c": c},
    )


def _fit_sparse_output(kernel, X, y, Z, sigma, j) -> _OutputFit:
    Kuu = output_gram(kernel, Z, Z, j=j)
    Kuf = output_gram(kernel, Z, X, j=j)
    Lu = chol_with_jitter(Kuu)
    A = solve_triangular(Lu, Kuf, lower=True) / sigma
    B = np.eye(A.shape[0]) + A @ A.T
    LB = chol_with_jitter(B, base=0.0)
    c = solve_triangular(LB, A @ y, lower=True) / sigma
    return _OutputFit(kind="sparse", Z=Z, Lu=Lu, LB=LB, c=c)


def sample_prior_function(kernel: TwoOutputKernelSpec, contexts, seed: int) -> np.ndarray:
    """One zero-mean prior draw at `contexts`; returns shape (n, 2).

    Deterministic per seed; the Gram gets 1e-8 diagonal jitter (escalated
    on failure) before factorization.
    """
    X = np.asarray(contexts, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise InputError("contexts must be nonempty")
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    if kernel.cross_correlation == 0.0:
        out = np.zeros((n, 2))
        for j in (0, 1):
            L = chol_with_jitter(output_gram(kernel, X, X, j=j))
            out[:, j] = L @ rng.standard_normal(n)
        return out
    L = chol_with_jitter(joint_gram(kernel, X))
    return (L @ rng.standard_normal(2 * n)).reshape(n, 2)
