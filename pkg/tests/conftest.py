"""Shared test oracles: brute-force implementations kept independent of the package's vectorized paths."""

import numpy as np

from tcgpucb.kernels import kernel_eval


def brute_force_conditioning(kernel_spec, X_obs, Y_obs, sigma, X_query):
    """Condition the joint 2(N+Q)-dim normal directly, entry by entry.

    Returns (means (Q, 2), cov (2Q, 2Q)) of f at the query contexts given
    noisy observations y = f(X_obs) + eps, built from scalar kernel_eval
    blocks and a dense solve; no shared code with the production fit.
    """
    X_obs = np.atleast_2d(np.asarray(X_obs, dtype=float))
    X_query = np.atleast_2d(np.asarray(X_query, dtype=float))
    if X_obs.size and X_obs.shape[0] != np.asarray(Y_obs).shape[0]:
        raise ValueError("observation mismatch")
    N, Q = X_obs.shape[0], X_query.shape[0]

    def blocks(A, B):
        out = np.zeros((2 * A.shape[0], 2 * B.shape[0]))
        for i in range(A.shape[0]):
            for k in range(B.shape[0]):
                out[2 * i : 2 * i + 2, 2 * k : 2 * k + 2] = kernel_eval(kernel_spec, A[i], B[k])
        return out

    Kqq = blocks(X_query, X_query)
    if N == 0:
        return np.zeros((Q, 2)), Kqq
    Koo = blocks(X_obs, X_obs) + sigma**2 * np.eye(2 * N)
    Kqo = blocks(X_query, X_obs)
    y = np.asarray(Y_obs, dtype=float).reshape(-1)
    sol = np.linalg.solve(Koo, y)
    means = (Kqo @ sol).reshape(Q, 2)
    cov = Kqq - Kqo @ np.linalg.solve(Koo, Kqo.T)
    return means, cov


def brute_force_good_subsets(member_ids, values, aggregator, threshold):
    """All nonempty subsets whose aggregated value meets the threshold."""
    from itertools import combinations

    good = set()
    ids = list(member_ids)
    for r in range(1, len(ids) + 1):
        for combo in combinations(ids, r):
            if aggregator([values[m] for m in combo], combo) >= threshold:
                good.add(frozenset(combo))
    return good
