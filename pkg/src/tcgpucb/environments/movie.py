"""Content-caching recommendation environment over a ratings catalog.

Base arms are (movie, user) pairs the user has rated; the context is the
rating-weighted genre alignment between user and movie, scaled by 1/10 and
clipped to [0, 1]. The first outcome is the alignment itself, the second a
saturating transform of it. Groups collect the pairs of users at the same
location; their reward follows the CES-style per-movie cubic aggregation,
and each group's threshold is a fixed multiple of its best single pair's
second outcome, so no singleton ever satisfies a group on its own.

Without dataset files, a synthetic catalog with matching marginals (20
genres, half-point rating grid, at least 200 ratings per user) is
generated so the full experiment runs self-contained.
"""

from __future__ import annotations

import numpy as np

from ..oracles import Group, GroupRewardModel
from .base import Environment, EnvOutcome, RoundScene
from .movielens import GENRES, N_LOCATIONS, Catalog

MOVIE_MEAN = 75.0
USER_MEAN = 200.0
NOISE_SIGMA = 0.05
DEFAULT_THRESHOLD_SCALE = 1.4


def movie_expected(x) -> np.ndarray:
    """Expected (alignment, saturating-alignment) outcome pair."""
    x = np.asarray(x, dtype=float)
    f2 = 2.0 / (1.0 + np.exp(-4.0 * x)) - 1.0
    return np.stack([x, f2], axis=-1)


def movie_outcome(x: float, rng: np.random.Generator | None = None) -> EnvOutcome:
    expected = movie_expected(float(x))
    rng = rng or np.random.default_rng(0)
    return EnvOutcome(expected=expected, realized=expected + rng.normal(0.0, NOISE_SIGMA, size=2))


def dixit_stiglitz_group_reward(values, movie_keys) -> float:
    """Sum over movies of the cube root of that movie's summed cubed values."""
    cells: dict[object, float] = {}
    for v, key in zip(values, movie_keys):
        cells[key] = cells.get(key, 0.0) + float(v) ** 3
    return float(sum(np.cbrt(c) for c in cells.values()))


def pair_context(catalog: Catalog, user_id: int, movie_id: int) -> float:
    raw = float(catalog.profile(user_id) @ catalog.movie_genres[movie_id]) / 10.0
    return min(max(raw, 0.0), 1.0)


_catalog_cache: dict[tuple, Catalog] = {}


def make_synthetic_catalog(
    seed: int,
    n_users: int = 450,
    n_movies: int = 4500,
    ratings_base: int = 200,
) -> Catalog:
    """Catalog with genre-focused users whose ratings follow their tastes.

    Cached per parameter tuple: the catalog plays the role of the fixed
    dataset, shared across trials that only differ in scene seeds.
    """
    key = (seed, n_users, n_movies, ratings_base)
    if key in _catalog_cache:
        return _catalog_cache[key]
    rng = np.random.default_rng(seed)
    n_genres = len(GENRES)
    popularity = 1.0 / np.arange(2, n_genres + 2)
    popularity /= popularity.sum()

    movie_genres: dict[int, np.ndarray] = {}
    for mid in range(n_movies):
        count = 1 + min(9, int(rng.poisson(1.0)))
        chosen = rng.choice(n_genres, size=count, replace=False, p=popularity)
        vec = np.zeros(n_genres)
        vec[chosen] = 1.0
        movie_genres[mid] = vec
    genre_matrix = np.vstack([movie_genres[m] for m in range(n_movies)])

    user_location: dict[int, int] = {}
    user_ratings: dict[int, dict[int, float]] = {}
    for uid in range(n_users):
        user_location[uid] = int(rng.integers(N_LOCATIONS))
        n_core = int(rng.integers(1, 4))
        core = rng.choice(n_genres, size=n_core, replace=False, p=popularity)
        pref = np.zeros(n_genres)
        pref[core] = rng.dirichlet(np.ones(n_core) * 0.8)
        affinity = genre_matrix @ pref  # in [0, 1]
        # sample rated movies biased toward the user's taste (Gumbel top-k)
        n_rated = min(n_movies, ratings_base + int(rng.poisson(40)))
        scores = 4.0 * affinity + rng.gumbel(size=n_movies)
        rated = np.argpartition(-scores, n_rated - 1)[:n_rated]
        ratings: dict[int, float] = {}
        for mid in sorted(rated):
            raw = 1.0 + 7.0 * affinity[mid] + rng.normal(0.0, 0.7)
            ratings[int(mid)] = float(min(max(round(raw * 2.0) / 2.0, 0.5), 5.0))
        user_ratings[uid] = ratings
    catalog = Catalog(movie_genres=movie_genres, user_location=user_location, user_ratings=user_ratings)
    if len(_catalog_cache) > 3:
        _catalog_cache.clear()
    _catalog_cache[key] = catalog
    return catalog


def movie_generate_round(
    catalog: Catalog,
    rng: np.random.Generator,
    t: int,
    budget: int,
    threshold_scale: float = DEFAULT_THRESHOLD_SCALE,
) -> RoundScene:
    """Sample movies and users, build the (movie, user) pair arms and location groups."""
    movie_ids = catalog.movie_ids
    user_ids = catalog.user_ids
    pairs: list[tuple[int, int]] = []
    for _ in range(10):
        n_movies = min(len(movie_ids), max(1, int(rng.poisson(MOVIE_MEAN))))
        movies = sorted(int(m) for m in rng.choice(movie_ids, size=n_movies, replace=False))
        movie_set = set(movies)
        eligible = [u for u in user_ids if any(m in movie_set for m in catalog.user_ratings[u])]
        if not eligible:
            continue
        n_users = min(len(eligible), max(1, int(rng.poisson(USER_MEAN))))
        users = sorted(int(u) for u in rng.choice(eligible, size=n_users, replace=False))
        pairs = [(m, u) for u in users for m in sorted(catalog.user_ratings[u]) if m in movie_set]
        if pairs:
            break
    arm_ids = list(range(len(pairs)))
    if not pairs:
        return RoundScene(
            t=t, arm_ids=[], contexts=np.zeros((0, 1)), groups=[], arm_group={},
            budget=budget, rule="ExactlyK", true_expected=np.zeros((0, 2)),
        )
    contexts = np.array([pair_context(catalog, u, m) for m, u in pairs])[:, None]
    true_expected = movie_expected(contexts[:, 0])
    arm_group: dict[int, object] = {}
    members_by_loc: dict[int, list[int]] = {}
    for arm, (m, u) in enumerate(pairs):
        loc = catalog.user_location[u]
        arm_group[arm] = loc
        members_by_loc.setdefault(loc, []).append(arm)
    groups = []
    for loc in sorted(members_by_loc):
        members = members_by_loc[loc]
        partition = {arm: pairs[arm][0] for arm in members}
        best_single = float(max(true_expected[arm, 1] for arm in members))
        groups.append(
            Group(
                id=loc,
                member_arm_ids=frozenset(members),
                threshold=threshold_scale * best_single,
                aggregator=GroupRewardModel("DixitStiglitz", partition=partition),
            )
        )
    return RoundScene(
        t=t,
        arm_ids=arm_ids,
        contexts=contexts,
        groups=groups,
        arm_group=arm_group,
        budget=budget,
        rule="ExactlyK",
        true_expected=true_expected,
    )


class MovieEnvironment(Environment):
    group_reward_kind = "DixitStiglitz"

    def __init__(
        self,
        scene_seed: int,
        horizon: int,
        catalog: Catalog | None = None,
        budget: int = 20,
        arm_bound: int = 3000,
        threshold_scale: float = DEFAULT_THRESHOLD_SCALE,
        catalog_seed: int = 202_4,
    ):
        self.noise_sigma = NOISE_SIGMA
        self.budget = budget
        self.rule = "ExactlyK"
        self.arm_bound = arm_bound
        self.catalog = catalog if catalog is not None else make_synthetic_catalog(catalog_seed)
        rng = np.random.default_rng(scene_seed)
        scenes = []
        for t in range(1, horizon + 1):
            scene = movie_generate_round(self.catalog, rng, t, budget, threshold_scale)
            while scene.n_arms > arm_bound:
                scene = movie_generate_round(self.catalog, rng, t, budget, threshold_scale)
            scenes.append(scene)
        super().__init__(scenes)
