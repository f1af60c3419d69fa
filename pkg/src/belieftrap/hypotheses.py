"""Consistent-hypothesis sets and the size-based progress signal.

Deliberately plain Python over state objects: this module is the brute-force
oracle that the vectorised Bayes filter in :mod:`belieftrap.belief` is checked
against.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .belief import StateSpace


class EmptyHypothesisSetError(ValueError):
    pass


@dataclass(frozen=True)
class HypothesisSet:
    members: frozenset
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, index) -> bool:
        return index in self.members


def init_full(space: StateSpace) -> HypothesisSet:
    return HypothesisSet(frozenset(range(space.size)), 0)


def filter_consistent(h: HypothesisSet, action, observation, evaluator: Callable,
                      space: StateSpace) -> HypothesisSet:
    """Keep states s with ``evaluator(s, action) == observation``.

    An empty result is returned as-is; callers decide whether that is an error.
    """
    if not h.members:
        raise EmptyHypothesisSetError("cannot filter an empty hypothesis set")
    kept = frozenset(i for i in h.members if evaluator(space.states[i], action) == observation)
    return HypothesisSet(kept, h.generation + 1)


def progress(h_prev: HypothesisSet, h_next: HypothesisSet) -> int:
    """Number of hypotheses eliminated, |H_prev| - |H_next|."""
    if not h_next.members <= h_prev.members:
        raise ValueError("next hypothesis set is not a subset of the previous one")
    return len(h_prev) - len(h_next)


def belief_from_hypotheses(h: HypothesisSet, space: StateSpace) -> np.ndarray:
    if not h.members:
        raise EmptyHypothesisSetError("no hypotheses left")
    b = np.zeros(space.size)
    b[sorted(h.members)] = 1.0 / len(h.members)
    return b
