"""Thresholded combinatorial GP-UCB: two-output GP bandits with group constraints."""

__version__ = "0.1.0"

from .acquisition import IndexParams, beta_schedule, reward_index, satisfying_estimate, satisfying_index
from .kernels import KernelSpec, TwoOutputKernelSpec, kernel_eval
from .posterior import (
    ObservationSet,
    PosteriorState,
    fit_exact_posterior,
    fit_sparse_posterior,
    sample_prior_function,
)

__all__ = [
    "IndexParams",
    "KernelSpec",
    "ObservationSet",
    "PosteriorState",
    "TwoOutputKernelSpec",
    "beta_schedule",
    "fit_exact_posterior",
    "fit_sparse_posterior",
    "kernel_eval",
    "reward_index",
    "sample_prior_function",
    "satisfying_estimate",
    "satisfying_index",
]
