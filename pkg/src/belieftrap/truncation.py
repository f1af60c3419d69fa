"""Progress-based truncation rules.

Every rule returns ``True`` for "truncate now" and ``False`` for "continue".
A turn's :class:`TurnSignal` describes the transition caused by that turn, so
after ``t`` completed turns the history holds ``t`` signals and a window of
size ``k`` covers turns ``[t - k, t)``. No rule fires before its window is full.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .envs.preference import cosine

UNKNOWN = "Unknown"
RULE_KINDS = ("t3_window", "gn_consistency", "cd_stall", "streak_unknown", "pe_sim_drop",
              "similarity_alpha", "random_beta", "none")
DEFAULT_K = {"t3_window": 3, "gn_consistency": 1, "cd_stall": 3, "streak_unknown": 5,
             "pe_sim_drop": 2, "similarity_alpha": 1, "random_beta": 1, "none": 1}


@dataclass(frozen=True)
class TurnSignal:
    progress: float | None = None
    feedback_label: str | None = None
    similarity_gain: float | None = None
    query_vector: tuple | None = None
    action_consistent: bool | None = None

    def __post_init__(self):
        if all(getattr(self, f) is None for f in self.__dataclass_fields__):
            raise ValueError("a turn signal needs at least one populated field")
        if self.query_vector is not None:
            object.__setattr__(self, "query_vector", tuple(float(v) for v in self.query_vector))


def t3_check(signals: Sequence[TurnSignal], k: int, delta_min: float, t: int) -> bool:
    """Truncate iff every progress value in turns ``[t - k, t)`` is below ``delta_min``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if t < k:
        return False
    if t > len(signals):
        raise ValueError(f"t={t} beyond the {len(signals)} recorded turns")
    window = [s.progress for s in signals[t - k:t]]
    if any(p is None for p in window):
        raise ValueError("progress missing inside the window")
    return all(p < delta_min for p in window)


def gn_consistency_rule(action_consistent: bool) -> bool:
    """Truncate when the guess was already ruled out by earlier feedback."""
    return not action_consistent


def cd_stall_rule(size_history: Sequence[int], k: int = 3) -> bool:
    """Truncate when the hypothesis set failed to shrink on each of the last ``k`` turns."""
    if len(size_history) < k + 1:
        return False
    tail = np.asarray(size_history[-(k + 1):])
    return bool(np.all(np.diff(tail) >= 0))


def streak_unknown_rule(labels: Sequence[str], k: int = 5) -> bool:
    return len(labels) >= k and all(label == UNKNOWN for label in labels[-k:])


def pe_sim_drop_rule(sim_gains: Sequence[float], k: int = 2) -> bool:
    """Strictly negative similarity gain on each of the last ``k`` turns; zero does not count."""
    return len(sim_gains) >= k and all(g < 0 for g in sim_gains[-k:])


def similarity_alpha_rule(query_vectors: Sequence, alpha: float) -> bool:
    """Truncate when the latest query is a near-repeat (cosine above ``alpha``) of any earlier one."""
    if len(query_vectors) < 2:
        if query_vectors:
            cosine(query_vectors[0], query_vectors[0])  # zero-vector check
        return False
    current = query_vectors[-1]
    return max(cosine(current, prev) for prev in query_vectors[:-1]) > alpha


def random_beta_rule(beta: float, seed, t: int) -> bool:
    """Bernoulli(beta) draw at position ``t`` of the stream keyed by ``seed``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    key = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return bool(np.random.default_rng([*key, t]).random() < beta)


@dataclass(frozen=True)
class TruncationRule:
    kind: str = "none"
    k: int | None = None
    delta_min: float = 1.0
    alpha: float = 0.9
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown truncation rule {self.kind!r}")
        if self.k is None:
            object.__setattr__(self, "k", DEFAULT_K[self.kind])
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.kind == "t3_window" and not self.delta_min > 0:
            raise ValueError("delta_min must be positive")
        if self.kind == "similarity_alpha" and not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 <= self.beta <= 1:
            raise ValueError("beta must lie in [0, 1]")

    def verdict(self, signals: Sequence[TurnSignal], stream=()) -> bool:
        """Decision after ``len(signals)`` completed turns.

        ``stream`` extends the seed for ``random_beta`` so concurrent rollouts
        draw from disjoint streams.
        """
        t = len(signals)
        if self.kind == "none" or t < self.k:
            return False
        recent = signals[t - self.k:]
        if self.kind == "t3_window":
            return t3_check(signals, self.k, self.delta_min, t)
        if self.kind == "gn_consistency":
            return all(gn_consistency_rule(s.action_consistent) for s in recent)
        if self.kind == "cd_stall":
            sizes = np.concatenate([[0.0], -np.cumsum([s.progress for s in recent])])
            return cd_stall_rule(sizes, self.k)
        if self.kind == "streak_unknown":
            return streak_unknown_rule([s.feedback_label for s in recent], self.k)
        if self.kind == "pe_sim_drop":
            return pe_sim_drop_rule([s.similarity_gain for s in recent], self.k)
        if self.kind == "similarity_alpha":
            return similarity_alpha_rule([s.query_vector for s in signals], self.alpha)
        return random_beta_rule(self.beta, (self.seed, *stream), t)
