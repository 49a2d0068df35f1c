"""Scene and outcome containers shared by every simulation environment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..oracles import Group


@dataclass
class EnvOutcome:
    """True expected outcome pair and its noisy realization."""

    expected: np.ndarray
    realized: np.ndarray


@dataclass
class RoundScene:
    """One round's arriving base arms, their groups, and the feasibility rule.

    `true_expected` carries the environment's ground-truth outcome pairs per
    arm; the decision loop must only consume it through outcome realization
    and benchmark/regret computation.
    """

    t: int
    arm_ids: list[int]
    contexts: np.ndarray  # (N, D)
    groups: list[Group]
    arm_group: dict[int, object]
    budget: int
    rule: str  # "AnySubsetUpToK" | "ExactlyK"
    true_expected: np.ndarray  # (N, 2)

    def __post_init__(self) -> None:
        if self.rule not in ("AnySubsetUpToK", "ExactlyK"):
            raise InputError(f"unknown feasibility rule {self.rule!r}")

    @property
    def n_arms(self) -> int:
        return len(self.arm_ids)

    def context_of(self, arm_id: int) -> np.ndarray:
        return self.contexts[self.arm_ids.index(arm_id)]

    def validate(self, arm_bound: int | None = None) -> None:
        seen: set[int] = set()
        for g in self.groups:
            overlap = seen & g.member_arm_ids
            if overlap:
                raise InputError(f"groups overlap on arms {sorted(overlap)}")
            seen |= g.member_arm_ids
        ungrouped = set(self.arm_ids) - seen
        if ungrouped:
            raise InputError(f"arms without a group: {sorted(ungrouped)}")
        stray = seen - set(self.arm_ids)
        if stray:
            raise InputError(f"group members that never arrived: {sorted(stray)}")
        if arm_bound is not None and self.n_arms > arm_bound:
            raise InputError(f"{self.n_arms} arms exceed the configured bound {arm_bound}")


class Environment:
    """Pre-generated sequence of scenes plus the outcome model."""

    noise_sigma: float
    budget: int
    rule: str
    arm_bound: int
    group_reward_kind: str

    def __init__(self, scenes: list[RoundScene]):
        self._scenes = scenes

    @property
    def horizon(self) -> int:
        return len(self._scenes)

    def scene(self, t: int) -> RoundScene:
        if not 1 <= t <= len(self._scenes):
            raise InputError(f"round {t} outside 1..{len(self._scenes)}")
        return self._scenes[t - 1]

    def realize(self, scene: RoundScene, selected: list[int], rng: np.random.Generator) -> dict[int, np.ndarray]:
        """Noisy outcomes for the selected arms (per-coordinate Gaussian noise)."""
        index = {a: i for i, a in enumerate(scene.arm_ids)}
        out: dict[int, np.ndarray] = {}
        for a in sorted(selected):
            noise = rng.normal(0.0, self.noise_sigma, size=2)
            out[a] = scene.true_expected[index[a]] + noise
        return out
