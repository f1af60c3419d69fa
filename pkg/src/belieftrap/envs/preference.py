"""PreferenceEstimation and the MovieRecommendation scoring rule."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..belief import StateSpace

TIE_EPS = 1e-9
SIMILARITY_THRESHOLD = 0.88
GRID_CAP = 50_000

YES, NO, EQUAL = "Yes", "No", "Equal"


def pe_score(weights, attributes) -> float:
    w, s = np.asarray(weights, float), np.asarray(attributes, float)
    if w.shape != s.shape:
        raise ValueError(f"dimension mismatch: {w.shape} vs {s.shape}")
    return float(np.dot(w, s))


def pe_compare(weights, movie_a, movie_b, tie_eps: float = TIE_EPS) -> str:
    """User feedback to "prefer A over B?": Yes, No or Equal."""
    sa, sb = pe_score(weights, movie_a), pe_score(weights, movie_b)
    if sa > sb + tie_eps:
        return YES
    if sb > sa + tie_eps:
        return NO
    return EQUAL


def mr_recommend(weights, unseen_movies: dict) -> str:
    """Highest-scoring movie; ties go to the lexicographically smallest name."""
    if not unseen_movies:
        raise ValueError("no unseen movies to recommend from")
    return min(unseen_movies, key=lambda name: (-pe_score(weights, unseen_movies[name]), name))


def grid_levels(levels: int) -> np.ndarray:
    if levels < 2:
        raise ValueError("need at least two grid levels")
    return np.linspace(0.0, 1.0, levels)


def pe_grid_states(dimension: int, levels: int, cap: int = GRID_CAP) -> StateSpace:
    """Every weight vector on the ``levels``-point grid of [0, 1]^dimension."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    count = levels ** dimension
    if count > cap:
        raise ValueError(f"grid of {count} states exceeds cap {cap}")
    vals = [round(float(v), 12) for v in grid_levels(levels)]
    return StateSpace(tuple(itertools.product(vals, repeat=dimension)))


def cosine(v, w) -> float:
    v, w = np.asarray(v, float), np.asarray(w, float)
    if v.shape != w.shape:
        raise ValueError(f"dimension mismatch: {v.shape} vs {w.shape}")
    nv, nw = np.linalg.norm(v), np.linalg.norm(w)
    if nv == 0 or nw == 0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.dot(v, w) / (nv * nw))


def binary_similarity(v, v_star, threshold: float = SIMILARITY_THRESHOLD) -> int:
    return int(cosine(v, v_star) > threshold)


@dataclass(frozen=True)
class PreferenceInstance:
    weights: tuple
    reference_movies: dict
    grid_levels: int = 6
    unseen_movies: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "reference_movies",
                           {k: tuple(map(float, v)) for k, v in sorted(self.reference_movies.items())})
        object.__setattr__(self, "unseen_movies",
                           {k: tuple(map(float, v)) for k, v in sorted(self.unseen_movies.items())})
        n = len(self.weights)
        if not all(0.0 <= w <= 1.0 for w in self.weights):
            raise ValueError("weights must lie in [0, 1]")
        for name, attrs in itertools.chain(self.reference_movies.items(), self.unseen_movies.items()):
            if len(attrs) != n:
                raise ValueError(f"movie {name!r} has {len(attrs)} attributes, expected {n}")
        if len(self.reference_movies) < 2:
            raise ValueError("need at least two reference movies")

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def grid_state(self) -> tuple:
        """The grid point representing the hidden weights (must lie on the grid)."""
        vals = grid_levels(self.grid_levels)
        snapped = []
        for w in self.weights:
            i = int(np.argmin(np.abs(vals - w)))
            if abs(vals[i] - w) > 1e-9:
                raise ValueError(f"weight {w} is not on the {self.grid_levels}-level grid")
            snapped.append(round(float(vals[i]), 12))
        return tuple(snapped)

    def compare(self, a: str, b: str, tie_eps: float = TIE_EPS) -> str:
        return pe_compare(self.weights, self.reference_movies[a], self.reference_movies[b], tie_eps)

    def to_dict(self) -> dict:
        return {
            "kind": "pe",
            "weights": list(self.weights),
            "reference_movies": {k: list(v) for k, v in self.reference_movies.items()},
            "grid_levels": self.grid_levels,
            "unseen_movies": {k: list(v) for k, v in self.unseen_movies.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreferenceInstance":
        return cls(tuple(d["weights"]), dict(d["reference_movies"]),
                   int(d.get("grid_levels", 6)), dict(d.get("unseen_movies", {})))


def pe_actions(movie_names) -> list[tuple[str, str]]:
    return list(itertools.combinations(sorted(movie_names), 2))


def pe_evaluator(reference_movies: dict, tie_eps: float = TIE_EPS):
    def evaluate(state, action):
        a, b = action
        return pe_compare(state, reference_movies[a], reference_movies[b], tie_eps)
    return evaluate


def random_movies(count: int, dimension: int, rng: np.random.Generator,
                  prefix: str = "Movie_") -> dict:
    width = max(2, len(str(count)))
    return {f"{prefix}{i:0{width}d}": tuple(round(float(v), 2) for v in rng.uniform(0, 1, dimension))
            for i in range(count)}


def estimate_vector(belief: np.ndarray, space: StateSpace) -> np.ndarray:
    """Posterior-mean weight vector of a belief over grid states."""
    return belief @ np.asarray(space.states, dtype=float)


def similarity_or_zero(v, v_star) -> float:
    try:
        return cosine(v, v_star)
    except ValueError:
        return 0.0

