"""Adapters turning a concrete instance into the pieces a rollout needs.

A :class:`Task` bundles the latent state space (with s* set), the tabulated
observation model used for Bayes updates, the scalar evaluator used for
hypothesis filtering, and the environment's own feedback function. The three
are computed along separate code paths on purpose.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ..belief import ObservationModel, StateSpace
from . import circuits as cd
from . import guess_numbers as gn
from . import preference as pe


@dataclass(frozen=True, eq=False)
class Task:
    kind: str
    space: StateSpace
    model: ObservationModel
    evaluate: Callable          # (state, action) -> observation, scalar path
    observe: Callable           # action -> observation, the environment itself
    action_features: np.ndarray  # (n_actions, d) query vectors
    action_states: np.ndarray | None = None  # GN: action index -> state index
    initial_evidence: tuple = ()            # ((action_idx, obs_idx), ...)
    instance: object = None

    @property
    def actions(self) -> tuple:
        return self.model.actions

    def answer_reward(self, belief: np.ndarray) -> float:
        """Terminal reward for submitting the agent's answer from ``belief``."""
        if self.kind == "pe":
            v = pe.estimate_vector(belief, self.space)
            try:
                return float(pe.binary_similarity(v, self.space.true_state))
            except ValueError:
                return 0.0
        # exact match on the MAP state, lowest index on ties
        return float(int(np.argmax(belief)) == self.space.true_index)

    def is_win(self, action_idx: int) -> bool:
        """GN only: guessing the secret ends the game."""
        return (self.action_states is not None
                and int(self.action_states[action_idx]) == self.space.true_index)

    def estimate(self, belief: np.ndarray) -> np.ndarray | None:
        if self.kind != "pe":
            return None
        return pe.estimate_vector(belief, self.space)


@lru_cache(maxsize=32)
def _gn_structure(a: int, b: int):
    space = gn.gn_enumerate_states(a, b)
    x, y = gn.gn_feedback_table(space.states)
    pairs = sorted(set(zip(x.ravel().tolist(), y.ravel().tolist())))
    pos = {p: i for i, p in enumerate(pairs)}
    lut = np.full((a + 1, a + 1), -1, dtype=np.int32)
    for (px, py), i in pos.items():
        lut[px, py] = i
    table = lut[x, y]
    feats = np.zeros((space.size, a * b))
    for i, g in enumerate(space.states):
        for p, d in enumerate(g):
            feats[i, p * b + d - 1] = 1.0
    return space, table, tuple(pairs), feats


def gn_task(instance: gn.GuessNumbersInstance, eta: float = 0.0) -> Task:
    base, table, alphabet, feats = _gn_structure(instance.num_digits, instance.num_symbols)
    space = base.with_truth(instance.secret)
    model = ObservationModel(table, alphabet, eta, space.states, gn.gn_feedback)
    g0 = model.action_index(instance.initial_guess)
    o0 = model.obs_index(tuple(instance.initial_feedback))
    return Task("gn", space, model, gn.gn_feedback, instance.feedback, feats,
                np.arange(space.size), ((g0, o0),), instance)


@lru_cache(maxsize=32)
def _cd_structure(candidates: tuple, labels: tuple, n: int, distinct: bool):
    space = cd.cd_states(len(candidates), len(labels), distinct)
    actions = cd.cd_actions(labels, n)
    tt = np.stack([cd.truth_table(c, n) for c in candidates])  # (C, 2^n)
    states = np.asarray(space.states, dtype=np.int64)           # (S, L)
    inputs = cd.all_inputs(n)
    table = np.empty((len(actions), space.size), dtype=np.int32)
    for i, (label, x) in enumerate(actions):
        table[i] = tt[states[:, labels.index(label)], inputs.index(x)]
    feats = np.zeros((len(actions), len(labels) + n))
    for i, (label, x) in enumerate(actions):
        feats[i, labels.index(label)] = 1.0
        feats[i, len(labels):] = 2 * np.asarray(x) - 1
    return space, tuple(actions), table, feats


def cd_task(instance: cd.CircuitInstance, eta: float = 0.0, distinct: bool = False) -> Task:
    labels = instance.labels
    base, actions, table, feats = _cd_structure(instance.candidates, labels,
                                                instance.num_inputs, distinct)
    space = base.with_truth(instance.hidden_state)
    evaluate = cd.cd_evaluator(instance.candidates, labels)
    model = ObservationModel(table, (0, 1), eta, actions, evaluate)

    def observe(action):
        return cd.cd_observe(instance, action[0], action[1])

    return Task("cd", space, model, evaluate, observe, feats, instance=instance)


@lru_cache(maxsize=32)
def _pe_structure(movies: tuple, dimension: int, levels: int):
    ref = dict(movies)
    space = pe.pe_grid_states(dimension, levels)
    actions = pe.pe_actions(ref)
    evaluate = pe.pe_evaluator(ref)
    alphabet = (pe.YES, pe.NO, pe.EQUAL)
    w = np.asarray(space.states, dtype=float)                       # (S, n)
    scores = {name: w @ np.asarray(attrs) for name, attrs in ref.items()}
    table = np.empty((len(actions), space.size), dtype=np.int32)
    for i, (a, b) in enumerate(actions):
        diff = scores[a] - scores[b]
        table[i] = np.where(diff > pe.TIE_EPS, 0, np.where(-diff > pe.TIE_EPS, 1, 2))
    feats = np.array([np.asarray(ref[a]) - np.asarray(ref[b]) for a, b in actions])
    return space, tuple(actions), table, alphabet, evaluate, feats


def pe_task(instance: pe.PreferenceInstance, eta: float = 0.0) -> Task:
    movies = tuple(sorted(instance.reference_movies.items()))
    base, actions, table, alphabet, evaluate, feats = _pe_structure(
        movies, instance.dimension, instance.grid_levels)
    space = base.with_truth(instance.grid_state())
    model = ObservationModel(table, alphabet, eta, actions, evaluate)

    def observe(action):
        return instance.compare(*action)

    return Task("pe", space, model, evaluate, observe, feats, instance=instance)


def make_task(instance, eta: float = 0.0, distinct: bool = False) -> Task:
    if isinstance(instance, gn.GuessNumbersInstance):
        return gn_task(instance, eta)
    if isinstance(instance, cd.CircuitInstance):
        return cd_task(instance, eta, distinct)
    if isinstance(instance, pe.PreferenceInstance):
        return pe_task(instance, eta)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")
