from .base import Environment, EnvOutcome, RoundScene
from .fl import FLEnvironment, fl_expected, fl_generate_round, fl_outcome
from .gp_synth import GPSyntheticEnvironment
from .movie import (
    MovieEnvironment,
    dixit_stiglitz_group_reward,
    make_synthetic_catalog,
    movie_expected,
    movie_generate_round,
    movie_outcome,
    pair_context,
)
from .movielens import GENRES, Catalog, MovieLensRecord, ingest_movielens, parse_genres

__all__ = [
    "Catalog",
    "Environment",
    "EnvOutcome",
    "FLEnvironment",
    "GENRES",
    "GPSyntheticEnvironment",
    "MovieEnvironment",
    "MovieLensRecord",
    "RoundScene",
    "dixit_stiglitz_group_reward",
    "fl_expected",
    "fl_generate_round",
    "fl_outcome",
    "ingest_movielens",
    "make_synthetic_catalog",
    "movie_expected",
    "movie_generate_round",
    "movie_outcome",
    "pair_context",
    "parse_genres",
]
