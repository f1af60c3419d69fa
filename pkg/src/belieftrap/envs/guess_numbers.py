"""GuessNumbers: xAyB feedback over a-permutations of the symbols 1..b."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..belief import StateSpace

# (a, b, x0, y0) sub-groups of the constructed GN dataset.
GN_PRESETS: dict[str, tuple[int, int, int, int]] = {
    f"gn-{a}-{b}-{x}-{y}": (a, b, x, y)
    for a, b, x, y in [
        (3, 4, 0, 3), (3, 4, 2, 0), (3, 4, 1, 2), (3, 5, 1, 2), (3, 5, 0, 3),
        (3, 5, 1, 0), (3, 5, 2, 0), (4, 4, 0, 4), (4, 5, 3, 0),
    ]
}


def gn_feedback(guess, secret) -> tuple[int, int]:
    """Return (x, y): exact-position matches and misplaced value matches."""
    if len(guess) != len(secret):
        raise ValueError(f"length mismatch: {len(guess)} vs {len(secret)}")
    x = sum(g == s for g, s in zip(guess, secret))
    y = len(set(guess) & set(secret)) - x
    return x, y


def gn_count(a: int, b: int) -> int:
    return math.perm(b, a)


def gn_enumerate_states(a: int, b: int) -> StateSpace:
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive")
    if a > b:
        raise ValueError(f"cannot draw {a} distinct symbols from {b}")
    return StateSpace(tuple(itertools.permutations(range(1, b + 1), a)))


def gn_feedback_table(states) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (x, y) for every (guess, secret) pair of ``states``.

    Returns two (n, n) int arrays indexed [guess, secret].
    """
    arr = np.asarray(states, dtype=np.int64)
    n, a = arr.shape
    x = np.zeros((n, n), dtype=np.int64)
    for p in range(a):
        x += arr[:, p][:, None] == arr[:, p][None, :]
    onehot = np.zeros((n, int(arr.max()) + 1), dtype=np.int64)
    np.put_along_axis(onehot, arr, 1, axis=1)
    common = onehot @ onehot.T
    return x, common - x


@dataclass(frozen=True)
class GuessNumbersInstance:
    num_digits: int
    num_symbols: int
    secret: tuple
    initial_guess: tuple
    initial_feedback: tuple

    def __post_init__(self):
        a, b = self.num_digits, self.num_symbols
        object.__setattr__(self, "secret", tuple(self.secret))
        object.__setattr__(self, "initial_guess", tuple(self.initial_guess))
        object.__setattr__(self, "initial_feedback", tuple(self.initial_feedback))
        if a < 1 or b < a:
            raise ValueError("need 1 <= num_digits <= num_symbols")
        for code in (self.secret, self.initial_guess):
            if len(code) != a or len(set(code)) != a or not all(1 <= d <= b for d in code):
                raise ValueError(f"{code} is not {a} distinct symbols from 1..{b}")
        if self.initial_guess == self.secret:
            raise ValueError("initial guess must differ from the secret")
        if self.initial_feedback != gn_feedback(self.initial_guess, self.secret):
            raise ValueError("initial feedback is inconsistent with the secret")

    def feedback(self, guess) -> tuple[int, int]:
        return gn_feedback(guess, self.secret)

    def to_dict(self) -> dict:
        return {
            "kind": "gn",
            "num_digits": self.num_digits,
            "num_symbols": self.num_symbols,
            "secret": list(self.secret),
            "initial_guess": list(self.initial_guess),
            "initial_feedback": list(self.initial_feedback),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GuessNumbersInstance":
        return cls(d["num_digits"], d["num_symbols"], tuple(d["secret"]),
                   tuple(d["initial_guess"]), tuple(d["initial_feedback"]))


def gn_sample_instance(a: int, b: int, rng: np.random.Generator,
                       initial_feedback: tuple[int, int] | None = None) -> GuessNumbersInstance:
    """Draw a secret, then an initial guess != secret (with the given feedback, if any)."""
    states = gn_enumerate_states(a, b).states
    secret = states[rng.integers(len(states))]
    pool = [g for g in states if g != secret
            and (initial_feedback is None or gn_feedback(g, secret) == tuple(initial_feedback))]
    if not pool:
        raise ValueError(f"no initial guess yields feedback {initial_feedback} for GN({a},{b})")
    guess = pool[rng.integers(len(pool))]
    return GuessNumbersInstance(a, b, secret, guess, gn_feedback(guess, secret))
