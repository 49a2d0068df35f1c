"""Confidence-width schedule and the two optimistic per-arm indices.

The reward index widens the first-output mean by 1/(1 - zeta) confidence
widths, the satisfying index widens the second-output mean by 1/zeta
widths; zeta in (0, 1) trades the two objectives off. The width multiplier
follows beta_t = 2 ln(M pi^2 t^2 / (3 delta)) for a uniform arm-count
bound M and confidence level delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class IndexParams:
    zeta: float
    delta: float
    M: int

    def __post_init__(self) -> None:
        if not 0.0 < self.zeta < 1.0:
            raise ValidationError("zeta must lie strictly inside (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValidationError("delta must lie strictly inside (0, 1)")
        if self.M < 1:
            raise ValidationError("M must be a positive integer")


def beta_schedule(params: IndexParams, t: int) -> float:
    """Width multiplier at round t; strictly increasing in t."""
    if t < 1:
        raise ValidationError("t must be >= 1")
    return 2.0 * math.log(params.M * math.pi**2 * t * t / (3.0 * params.delta))


def reward_index(params: IndexParams, mu1: float, sigma1: float, beta: float):
    """Optimistic index for super-arm value: mu1 + sqrt(beta)*sigma1/(1-zeta)."""
    return mu1 + math.sqrt(beta) * sigma1 / (1.0 - params.zeta)


def satisfying_index(params: IndexParams, mu2: float, sigma2: float, beta: float):
    """Optimistic index for group satisfaction: mu2 + sqrt(beta)*sigma2/zeta."""
    return mu2 + math.sqrt(beta) * sigma2 / params.zeta


def satisfying_estimate(params: IndexParams, mu2, sigma2, beta: float, direction: int):
    """Signed satisfying estimate fed to the group oracle.

    `direction` is +1 when the group aggregator is nondecreasing in its
    inputs (larger outcome estimates make a subgroup look better) and -1
    when it is nonincreasing, e.g. a negated-loss aggregator: there the
    optimistic estimate is the lower confidence bound.
    """
    return mu2 + direction * math.sqrt(beta) * sigma2 / params.zeta
