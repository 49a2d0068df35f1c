"""Synthetic environment with GP-drawn outcomes over 2-D contexts.

A pool of 6000 contexts is sampled once per trial together with one prior
draw of the two-output function at those points; every round's arms reuse
pool entries, so no further function sampling is needed. Groups arrive
Poisson(50) per round with Poisson(5) members each; the group reward is
the variance of the selected members' second outcomes, and one global
threshold is set to the 80th percentile of the full-group rewards observed
in a pre-pass over the whole horizon.
"""

from __future__ import annotations

import numpy as np

from ..kernels import TwoOutputKernelSpec
from ..oracles import Group, GroupRewardModel
from ..posterior import sample_prior_function
from .base import Environment, RoundScene

POOL_SIZE = 6000
GROUP_MEAN = 50.0
MEMBER_MEAN = 5.0
MAX_MEMBERS = 20
NOISE_SIGMA = 0.1
THRESHOLD_PERCENTILE = 80.0

_pool_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _pool_draw(kernel: TwoOutputKernelSpec, scene_seed: int) -> tuple[np.ndarray, np.ndarray]:
    key = (scene_seed, repr(kernel))
    if key not in _pool_cache:
        rng = np.random.default_rng(scene_seed)
        contexts = rng.uniform(0.0, 1.0, size=(POOL_SIZE, 2))
        f = sample_prior_function(kernel, contexts, seed=scene_seed + 1)
        if len(_pool_cache) > 4:
            _pool_cache.clear()
        _pool_cache[key] = (contexts, f)
    return _pool_cache[key]


class GPSyntheticEnvironment(Environment):
    group_reward_kind = "Variance"

    def __init__(
        self,
        kernel: TwoOutputKernelSpec,
        scene_seed: int,
        horizon: int,
        budget: int = 10,
        arm_bound: int = 600,
    ):
        self.noise_sigma = NOISE_SIGMA
        self.budget = budget
        self.rule = "AnySubsetUpToK"
        self.arm_bound = arm_bound
        self.pool_contexts, self.pool_values = _pool_draw(kernel, scene_seed)
        rng = np.random.default_rng(scene_seed + 2)  # distinct stream from the pool draw
        raw_scenes: list[list[np.ndarray]] = []
        full_group_rewards: list[float] = []
        model = GroupRewardModel("Variance")
        for _ in range(horizon):
            n_groups = max(1, int(rng.poisson(GROUP_MEAN)))
            group_indices: list[np.ndarray] = []
            total = 0
            for _ in range(n_groups):
                n_members = max(1, min(MAX_MEMBERS, int(rng.poisson(MEMBER_MEAN))))
                if total + n_members > arm_bound:
                    break
                idx = rng.integers(0, POOL_SIZE, size=n_members)
                group_indices.append(idx)
                total += n_members
                full_group_rewards.append(model.value(self.pool_values[idx, 1], range(n_members)))
            raw_scenes.append(group_indices)
        self.threshold = float(np.percentile(full_group_rewards, THRESHOLD_PERCENTILE))
        scenes = []
        for t, group_indices in enumerate(raw_scenes, start=1):
            scenes.append(self._build_scene(t, group_indices))
        super().__init__(scenes)

    def _build_scene(self, t: int, group_indices: list[np.ndarray]) -> RoundScene:
        arm_ids: list[int] = []
        pool_idx: list[int] = []
        groups: list[Group] = []
        arm_group: dict[int, object] = {}
        next_arm = 0
        for gi, idx in enumerate(group_indices):
            members = []
            for pool_i in idx:
                arm_ids.append(next_arm)
                pool_idx.append(int(pool_i))
                members.append(next_arm)
                arm_group[next_arm] = gi
                next_arm += 1
            groups.append(
                Group(
                    id=gi,
                    member_arm_ids=frozenset(members),
                    threshold=self.threshold,
                    aggregator=GroupRewardModel("Variance"),
                )
            )
        sel = np.asarray(pool_idx, dtype=int)
        return RoundScene(
            t=t,
            arm_ids=arm_ids,
            contexts=self.pool_contexts[sel],
            groups=groups,
            arm_group=arm_group,
            budget=self.budget,
            rule="AnySubsetUpToK",
            true_expected=self.pool_values[sel],
        )
