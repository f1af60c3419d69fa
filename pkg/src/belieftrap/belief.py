"""Exact Bayesian belief machinery over enumerated latent-state spaces.

Beliefs are plain 1-D ``float64`` numpy arrays aligned with a
:class:`StateSpace`. Actions and observations are referred to by their
integer index into ``ObservationModel.actions`` / ``ObservationModel.alphabet``.

All logs are natural logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Hashable, Sequence

import numpy as np

PSI_MAX = 50.0
ENUMERATION_CAP = 10**6
SUM_TOL = 1e-12

Policy = Callable[[np.ndarray], np.ndarray]
Updater = Callable[[np.ndarray, int, int], np.ndarray]


class DegenerateNormalizerError(ValueError):
    """The Bayes normalizer p_b(o|a) vanished (only possible with eta = 0)."""


@dataclass(frozen=True)
class StateSpace:
    states: tuple
    true_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("state space must be non-empty")
        if not 0 <= self.true_index < len(self.states):
            raise IndexError(f"true_index {self.true_index} out of range")
        if len(self._lookup) != len(self.states):
            raise ValueError("state identifiers must be unique")

    @cached_property
    def _lookup(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def true_state(self) -> Hashable:
        return self.states[self.true_index]

    def index(self, state) -> int:
        return self._lookup[state]

    def with_truth(self, state) -> "StateSpace":
        """Same states, different s*. The lookup table is shared."""
        new = replace(self, true_index=self.index(state))
        new.__dict__["_lookup"] = self._lookup
        return new


@dataclass(frozen=True, eq=False)
class ObservationModel:
    """Deterministic evaluator smoothed to a floor ``eta``.

    ``table[a, s]`` is the index (into ``alphabet``) of the observation the
    evaluator produces for state ``s`` under action ``a``. The smoothed model is

        O(o|s,a) = (1 - eta*K) * 1[o == table[a, s]] + eta

    with ``K = len(alphabet)``, so every entry is at least ``eta`` and eta = 0
    recovers the deterministic evaluator.
    """

    table: np.ndarray
    alphabet: tuple
    eta: float = 0.0
    actions: tuple | None = None
    evaluator: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        table = np.asarray(self.table)
        if table.ndim != 2:
            raise ValueError("table must be (n_actions, n_states)")
        if not np.issubdtype(table.dtype, np.integer):
            raise TypeError("table must hold integer observation indices")
        alphabet = tuple(self.alphabet)
        k = len(alphabet)
        if k == 0 or table.min() < 0 or table.max() >= k:
            raise ValueError("table entries must index into the alphabet")
        if not 0.0 <= self.eta <= 1.0 / k + 1e-15:
            raise ValueError(f"eta must lie in [0, 1/{k}] for a {k}-symbol alphabet")
        if self.actions is not None and len(self.actions) != table.shape[0]:
            raise ValueError("actions length does not match table")
        table = table.copy()
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "alphabet", alphabet)
        if self.actions is not None:
            object.__setattr__(self, "actions", tuple(self.actions))

    @classmethod
    def from_evaluator(cls, states: Sequence, actions: Sequence, evaluator: Callable,
                       eta: float = 0.0, alphabet: Sequence | None = None) -> "ObservationModel":
        """Tabulate ``evaluator(state, action)`` over every pair.

        Without an explicit alphabet, the reachable outcomes (sorted) are used.
        """
        raw = [[evaluator(s, a) for s in states] for a in actions]
        if alphabet is None:
            alphabet = sorted({o for row in raw for o in row})
        pos = {o: i for i, o in enumerate(alphabet)}
        table = np.array([[pos[o] for o in row] for row in raw], dtype=np.int32)
        return cls(table, tuple(alphabet), eta, tuple(actions), evaluator)

    @property
    def n_actions(self) -> int:
        return self.table.shape[0]

    @property
    def n_states(self) -> int:
        return self.table.shape[1]

    @property
    def n_obs(self) -> int:
        return len(self.alphabet)

    @property
    def mix(self) -> float:
        """Total probability mass spread uniformly by the smoothing (eta * K)."""
        return self.eta * self.n_obs

    @cached_property
    def _action_lookup(self) -> dict:
        return {a: i for i, a in enumerate(self.actions or ())}

    @cached_property
    def _obs_lookup(self) -> dict:
        return {o: i for i, o in enumerate(self.alphabet)}

    def action_index(self, action) -> int:
        return self._action_lookup[action]

    def obs_index(self, obs) -> int:
        return self._obs_lookup[obs]

    def with_eta(self, eta: float) -> "ObservationModel":
        return ObservationModel(self.table, self.alphabet, eta, self.actions, self.evaluator)

    def likelihood(self, a: int, o: int) -> np.ndarray:
        """O(o|s,a) for every state s."""
        hit = (self.table[a] == o).astype(float)
        return (1.0 - self.mix) * hit + self.eta

    def outcome_probs(self, a: int, s: int) -> np.ndarray:
        """O(.|s,a) over the alphabet."""
        p = np.full(self.n_obs, self.eta)
        p[self.table[a, s]] += 1.0 - self.mix
        return p

    def outcome_mass(self, b: np.ndarray) -> np.ndarray:
        """D[a, o] = sum_s b(s) 1[table[a, s] == o], shape (n_actions, n_obs)."""
        k = self.n_obs
        flat = (np.arange(self.n_actions)[:, None] * k + self.table).ravel()
        w = np.broadcast_to(b, self.table.shape).ravel()
        return np.bincount(flat, weights=w, minlength=self.n_actions * k).reshape(-1, k)

    def predictive(self, b: np.ndarray) -> np.ndarray:
        """Q_b(o|a) = p_b(o|a) for every action and observation."""
        return (1.0 - self.mix) * self.outcome_mass(b) + self.eta


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def point_mass(n: int, i: int) -> np.ndarray:
    b = np.zeros(n)
    b[i] = 1.0
    return b


def check_belief(b, n: int | None = None) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise ValueError("belief must be one-dimensional")
    if n is not None and b.size != n:
        raise ValueError(f"belief has {b.size} entries, expected {n}")
    if np.any(b < 0) or abs(b.sum() - 1.0) > SUM_TOL * max(1, b.size):
        raise ValueError("belief must be non-negative and sum to 1")
    return b


def bayes_update(b: np.ndarray, a: int, o: int, model: ObservationModel) -> np.ndarray:
    post = model.likelihood(a, o) * b
    z = post.sum()
    if z <= 0.0:
        raise DegenerateNormalizerError(f"p_b(o={o}|a={a}) = 0")
    return post / z


def potential_of(p_true: float) -> float:
    """-log p, saturated at PSI_MAX."""
    if p_true <= 0.0:
        return PSI_MAX
    return min(PSI_MAX, -math.log(p_true))


def potential(b: np.ndarray, space: StateSpace) -> float:
    """Truth-anchored potential -log b(s*), saturating at ``PSI_MAX``."""
    return potential_of(float(b[space.true_index]))


def l1_distance(b: np.ndarray, b2: np.ndarray) -> float:
    b, b2 = np.asarray(b), np.asarray(b2)
    if b.shape != b2.shape:
        raise ValueError(f"dimension mismatch: {b.shape} vs {b2.shape}")
    return float(np.abs(b - b2).sum())


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * l1_distance(p, q)


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / q), 0.0)
    return terms.sum(axis=-1)


def informativeness_all(b: np.ndarray, space: StateSpace, model: ObservationModel) -> np.ndarray:
    """I(b, a) for every action, via E_{o~P}[log P(o)/Q_b(o)]."""
    s = space.true_index
    if b[s] <= 0.0:
        # both potentials saturate; no progress is measurable
        return np.zeros(model.n_actions)
    p = np.full((model.n_actions, model.n_obs), model.eta)
    p[np.arange(model.n_actions), model.table[:, s]] += 1.0 - model.mix
    return _kl_rows(p, model.predictive(b))


def informativeness(b: np.ndarray, a: int, space: StateSpace, model: ObservationModel) -> float:
    """Expected one-step drop in the potential under the exact update."""
    s = space.true_index
    if b[s] <= 0.0:
        return 0.0
    p = model.outcome_probs(a, s)
    q = (1.0 - model.mix) * np.bincount(model.table[a], weights=b, minlength=model.n_obs) + model.eta
    return float(_kl_rows(p, q))


def mutual_information_all(b: np.ndarray, model: ObservationModel) -> np.ndarray:
    """Belief-averaged informativeness, i.e. I(S; O) under b, for every action.

    This is what an agent that does not know s* can compute.
    """
    q = model.predictive(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_q = -np.where(q > 0, q * np.log(q), 0.0).sum(axis=1)
    row = np.full(model.n_obs, model.eta)
    row[0] += 1.0 - model.mix
    h_noise = -float(np.where(row > 0, row * np.log(np.where(row > 0, row, 1.0)), 0.0).sum())
    return np.maximum(h_q - h_noise, 0.0)


def _outcomes(b, policy: Policy, space: StateSpace, model: ObservationModel,
              draws: int, rng: np.random.Generator | None, cap: int):
    """Yield (weight, a, o) over the joint a~pi(.|b), o~O(.|s*,a).

    Exact enumeration (weights sum to 1) when |A|*|O| <= cap, otherwise
    ``draws`` Monte-Carlo samples with weight 1/draws.
    """
    pi = np.asarray(policy(b), dtype=float)
    s = space.true_index
    if model.n_actions * model.n_obs <= cap:
        for a in np.flatnonzero(pi > 0):
            p = model.outcome_probs(a, s)
            for o in np.flatnonzero(p > 0):
                yield pi[a] * p[o], int(a), int(o)
        return
    rng = rng if rng is not None else np.random.default_rng(0)
    acts = rng.choice(model.n_actions, size=draws, p=pi / pi.sum())
    for a in acts:
        p = model.outcome_probs(a, s)
        yield 1.0 / draws, int(a), int(rng.choice(model.n_obs, p=p))


def _expect(fn, b, policy, space, model, draws, rng, cap, with_stderr):
    vals, weights = [], []
    for w, a, o in _outcomes(b, policy, space, model, draws, rng, cap):
        vals.append(fn(a, o))
        weights.append(w)
    vals, weights = np.array(vals), np.array(weights)
    mean = float(np.dot(weights, vals))
    if not with_stderr:
        return mean
    exact = model.n_actions * model.n_obs <= cap
    se = 0.0 if exact else float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return mean, se


def agent_progress(b: np.ndarray, policy: Policy, updater: Updater, space: StateSpace,
                   model: ObservationModel, *, draws: int = 4000, rng=None,
                   cap: int = ENUMERATION_CAP, with_stderr: bool = False):
    """P_theta(b) = Psi(b) - E_a E_o[Psi(B_theta(b, a, o))]."""
    psi = potential(b, space)
    return _expect(lambda a, o: psi - potential(updater(b, a, o), space),
                   b, policy, space, model, draws, rng, cap, with_stderr)


def update_error(b: np.ndarray, policy: Policy, updater: Updater, space: StateSpace,
                 model: ObservationModel, *, draws: int = 4000, rng=None,
                 cap: int = ENUMERATION_CAP, with_stderr: bool = False):
    """c_theta(b) = E_a E_o[Psi(B_theta(b,a,o)) - Psi(B*(b,a,o))]."""
    def excess(a, o):
        return potential(updater(b, a, o), space) - potential(bayes_update(b, a, o, model), space)
    return _expect(excess, b, policy, space, model, draws, rng, cap, with_stderr)


def mean_informativeness(b: np.ndarray, policy: Policy, space: StateSpace,
                         model: ObservationModel) -> float:
    """E_{a~pi(.|b)} I(b, a)."""
    return float(np.dot(policy(b), informativeness_all(b, space, model)))
