"""Privacy-aware task-allocation environment.

Each round a Poisson(50) number of clients arrives, each with a Poisson(5)
number of requests; a request's context is its dataset-usage fraction,
drawn from the grid {0.01, ..., 1.00}. The first outcome is the
information retrieved, the second the leakage incurred. Each client is a
group whose reward is the negated total leakage of its selected requests
with threshold equal to the negated leakage budget, so satisfaction means
total leakage at most the budget.
"""

from __future__ import annotations

import numpy as np

from ..oracles import Group, GroupRewardModel
from .base import Environment, EnvOutcome, RoundScene

CONTEXT_GRID = np.round(np.arange(1, 101) * 0.01, 2)

CLIENT_MEAN = 50.0
REQUEST_MEAN = 5.0
MAX_REQUESTS = 20  # keeps per-group subset enumeration exhaustive
NOISE_SIGMA = 0.05


def fl_expected(x) -> np.ndarray:
    """Expected (information, leakage) pair for usage fraction(s) x."""
    x = np.asarray(x, dtype=float)
    info = 1.0 / (1.0 + np.exp(5.0 - 10.0 * x))
    leak = 0.05 + 0.95 * np.exp(-5.0 * x)
    return np.stack([info, leak], axis=-1)


def fl_outcome(x: float, rng: np.random.Generator | None = None) -> EnvOutcome:
    expected = fl_expected(float(x))
    rng = rng or np.random.default_rng(0)
    return EnvOutcome(expected=expected, realized=expected + rng.normal(0.0, NOISE_SIGMA, size=2))


def fl_generate_round(
    rng: np.random.Generator,
    t: int,
    budget: int,
    budgets_pool: np.ndarray | None = None,
) -> RoundScene:
    """Draw one scene. With a persistent `budgets_pool`, clients are sampled
    from that pool and keep their leakage budgets across rounds; otherwise
    each round's clients get fresh uniform budgets."""
    n_clients = max(1, int(rng.poisson(CLIENT_MEAN)))
    if budgets_pool is not None:
        n_clients = min(n_clients, budgets_pool.shape[0])
        client_ids = np.sort(rng.choice(budgets_pool.shape[0], size=n_clients, replace=False))
        budgets = budgets_pool[client_ids]
    else:
        client_ids = np.arange(n_clients)
        budgets = rng.uniform(0.0, 1.0, size=n_clients)
    per_client_x = [
        rng.choice(CONTEXT_GRID, size=max(1, min(MAX_REQUESTS, int(rng.poisson(REQUEST_MEAN)))))
        for _ in client_ids
    ]
    # interleave ids across clients so id-order tie-breaking never stacks
    # one client's whole request list into an uninformed selection
    arm_ids: list[int] = []
    contexts: list[float] = []
    members: list[list[int]] = [[] for _ in client_ids]
    arm_group: dict[int, object] = {}
    next_arm = 0
    for rank in range(max(len(xs) for xs in per_client_x)):
        for ci_pos, xs in enumerate(per_client_x):
            if rank < len(xs):
                arm_ids.append(next_arm)
                contexts.append(float(xs[rank]))
                members[ci_pos].append(next_arm)
                arm_group[next_arm] = int(client_ids[ci_pos])
                next_arm += 1
    groups = [
        Group(
            id=int(ci),
            member_arm_ids=frozenset(mem),
            threshold=-float(budget_c),
            aggregator=GroupRewardModel("NegLeakageSum"),
        )
        for ci, budget_c, mem in zip(client_ids, budgets, members)
    ]
    X = np.asarray(contexts)[:, None]
    return RoundScene(
        t=t,
        arm_ids=arm_ids,
        contexts=X,
        groups=groups,
        arm_group=arm_group,
        budget=budget,
        rule="AnySubsetUpToK",
        true_expected=fl_expected(X[:, 0]),
    )


class FLEnvironment(Environment):
    group_reward_kind = "NegLeakageSum"

    def __init__(
        self,
        scene_seed: int,
        horizon: int,
        budget: int = 20,
        arm_bound: int = 600,
        persistent_clients: bool = True,
        client_pool_size: int = 100,
    ):
        self.noise_sigma = NOISE_SIGMA
        self.budget = budget
        self.rule = "AnySubsetUpToK"
        self.arm_bound = arm_bound
        rng = np.random.default_rng(scene_seed)
        pool = rng.uniform(0.0, 1.0, size=client_pool_size) if persistent_clients else None
        scenes = []
        for t in range(1, horizon + 1):
            scene = fl_generate_round(rng, t, budget, budgets_pool=pool)
            while scene.n_arms > arm_bound:  # resample the rare overflow draw
                scene = fl_generate_round(rng, t, budget, budgets_pool=pool)
            scenes.append(scene)
        super().__init__(scenes)
