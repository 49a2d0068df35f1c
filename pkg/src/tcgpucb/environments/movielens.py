"""Ratings-dataset ingestion: CSV parsing, filtering, and the catalog model.

Expected layouts: ratings  `userId,movieId,rating,timestamp` (Unix seconds)
and movies `movieId,title,genres` with pipe-separated genre names from the
fixed 20-name list. Ingestion keeps ratings from 2015 onward and users
with at least 200 surviving ratings, then assigns each user a location
uniformly from 10 sites using the provided seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import IngestionError

GENRES = (
    "Action", "Adventure", "Animation", "Children", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "IMAX",
    "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War",
    "Western", "(no genres listed)",
)
GENRE_INDEX = {g: i for i, g in enumerate(GENRES)}
N_LOCATIONS = 10
MIN_RATINGS_PER_USER = 200
CUTOFF_TIMESTAMP = 1_420_070_400  # 2015-01-01T00:00:00Z
RATING_GRID = {round(0.5 * k, 1) for k in range(1, 11)}


@dataclass
class MovieLensRecord:
    user_id: int
    movie_id: int
    rating: float
    timestamp: int


@dataclass
class Catalog:
    """Movies with genre vectors plus users with locations and rating histories."""

    movie_genres: dict[int, np.ndarray]
    user_location: dict[int, int]
    user_ratings: dict[int, dict[int, float]]
    skipped_rows: int = 0
    _profiles: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def profile(self, user_id: int) -> np.ndarray:
        """Rating-weighted average genre vector of the user's rated movies."""
        if user_id not in self._profiles:
            num = np.zeros(len(GENRES))
            den = 0.0
            for mid, r in self.user_ratings[user_id].items():
                num += r * self.movie_genres[mid]
                den += r
            self._profiles[user_id] = num / den if den > 0 else num
        return self._profiles[user_id]

    @property
    def user_ids(self) -> list[int]:
        return sorted(self.user_ratings)

    @property
    def movie_ids(self) -> list[int]:
        return sorted(self.movie_genres)


def parse_genres(genre_field: str) -> np.ndarray | None:
    """Binary 20-vector for a pipe-separated genre string; None when malformed."""
    vec = np.zeros(len(GENRES))
    names = [g.strip() for g in genre_field.split("|") if g.strip()]
    if not names:
        return None
    for name in names:
        if name not in GENRE_INDEX:
            return None
        vec[GENRE_INDEX[name]] = 1.0
    ones = int(vec.sum())
    if not 1 <= ones <= 10:
        return None
    return vec


def ingest_movielens(ratings_path, movies_path, seed: int, min_ratings: int = MIN_RATINGS_PER_USER) -> Catalog:
    """Parse, filter and assemble a catalog; malformed rows are skipped and counted."""
    skipped = 0
    movie_genres: dict[int, np.ndarray] = {}
    with open(movies_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                mid = int(row["movieId"])
                vec = parse_genres(row["genres"])
            except (KeyError, TypeError, ValueError):
                skipped += 1
                continue
            if vec is None:
                skipped += 1
                continue
            movie_genres[mid] = vec

    by_user: dict[int, dict[int, float]] = {}
    with open(ratings_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            try:
                uid = int(row["userId"])
                mid = int(row["movieId"])
                rating = float(row["rating"])
                ts = int(row["timestamp"])
            except (KeyError, TypeError, ValueError):
                skipped += 1
                continue
            if ts < CUTOFF_TIMESTAMP or mid not in movie_genres or round(rating, 1) not in RATING_GRID:
                skipped += 1
                continue
            by_user.setdefault(uid, {})[mid] = rating

    kept = {uid: ratings for uid, ratings in by_user.items() if len(ratings) >= min_ratings}
    if not kept:
        raise IngestionError("no users with enough post-cutoff ratings survived ingestion")
    rng = np.random.default_rng(seed)
    locations = {uid: int(rng.integers(N_LOCATIONS)) for uid in sorted(kept)}
    used_movies = {mid for ratings in kept.values() for mid in ratings}
    return Catalog(
        movie_genres={mid: movie_genres[mid] for mid in sorted(used_movies)},
        user_location=locations,
        user_ratings=kept,
        skipped_rows=skipped,
    )
