"""Belief-conditioned policies and the imperfect updater family B_theta."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import (PSI_MAX, ObservationModel, StateSpace, bayes_update, l1_distance,
                     mutual_information_all, potential, tv_distance)

TEMPERATURE_FLOOR = 1e-6
POLICY_KINDS = ("infogain_softmax", "uniform_consistent", "fixed_sequence")
CORRUPTION_KINDS = ("none", "uniform_mix", "psi_coupled_mix")


@dataclass(frozen=True)
class PolicySpec:
    kind: str = "infogain_softmax"
    temperature: float = 0.05
    seed: int = 0
    sequence: tuple = ()

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "infogain_softmax" and not self.temperature > 0:
            raise ValueError("softmax temperature must be positive")
        if self.kind == "fixed_sequence" and not self.sequence:
            raise ValueError("fixed_sequence needs a non-empty action sequence")
        object.__setattr__(self, "sequence", tuple(self.sequence))


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str = "none"
    eps0: float = 0.0
    slope: float = 0.0
    eps_cap: float = 1.0

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise ValueError(f"unknown corruption kind {self.kind!r}")
        if not 0.0 <= self.eps0 <= self.eps_cap <= 1.0:
            raise ValueError("need 0 <= eps0 <= eps_cap <= 1")
        if self.slope < 0:
            raise ValueError("slope must be non-negative")


def _softmax(scores: np.ndarray, temperature: float) -> np.ndarray:
    if temperature < TEMPERATURE_FLOOR:
        p = np.zeros_like(scores)
        p[int(np.argmax(scores))] = 1.0  # argmax ties -> lowest index
        return p
    z = (scores - scores.max()) / temperature
    e = np.exp(z)
    return e / e.sum()


def policy_distribution(spec: PolicySpec, b: np.ndarray, legal_actions, space: StateSpace,
                        model: ObservationModel, *, turn: int = 0,
                        action_states: np.ndarray | None = None) -> np.ndarray:
    """Distribution over all of ``model``'s actions; illegal actions get zero.

    ``infogain_softmax`` scores an action by the information it is expected to
    reveal about the state under the agent's own belief (the belief-averaged
    informativeness). When ``action_states`` maps actions to states (GN), the
    probability that the action itself is the answer is added, so a certain
    belief still points at the right guess. ``uniform_consistent`` is uniform over actions that
    correspond to states in the belief's support when ``action_states`` maps
    actions to states (GN), otherwise over actions whose outcome is not
    constant across that support.
    """
    legal = np.arange(model.n_actions) if legal_actions is None else np.asarray(legal_actions)
    if legal.size == 0:
        raise ValueError("no legal actions")
    out = np.zeros(model.n_actions)
    if spec.kind == "fixed_sequence":
        out[spec.sequence[turn % len(spec.sequence)]] = 1.0
        return out
    if spec.kind == "infogain_softmax":
        scores = mutual_information_all(b, model)
        if action_states is not None:
            scores = scores + b[action_states]
        scores = scores[legal]
        out[legal] = _softmax(scores, spec.temperature)
        return out
    support = b > 0
    if action_states is not None:
        ok = support[action_states[legal]]
    else:
        sub = model.table[legal][:, support]
        ok = (sub != sub[:, :1]).any(axis=1)
    chosen = legal[ok] if ok.any() else legal
    out[chosen] = 1.0 / chosen.size
    return out


def make_policy(spec: PolicySpec, space: StateSpace, model: ObservationModel, *,
                legal_actions=None, turn: int = 0, action_states=None):
    def policy(b):
        return policy_distribution(spec, b, legal_actions, space, model,
                                   turn=turn, action_states=action_states)
    return policy


def mix_rate(spec: CorruptionSpec, b: np.ndarray, space: StateSpace) -> float:
    if spec.kind == "none":
        return 0.0
    if spec.kind == "uniform_mix":
        return spec.eps0
    return min(spec.eps_cap, spec.eps0 + spec.slope * potential(b, space))


def corrupted_update(spec: CorruptionSpec, b: np.ndarray, a: int, o: int,
                     space: StateSpace, model: ObservationModel) -> np.ndarray:
    """Exact Bayes posterior pulled toward uniform by the corruption's mixing rate."""
    post = bayes_update(b, a, o, model)
    eps = mix_rate(spec, b, space)
    if eps == 0.0:
        return post
    return (1.0 - eps) * post + eps / post.size


def make_updater(spec: CorruptionSpec, space: StateSpace, model: ObservationModel):
    def updater(b, a, o):
        return corrupted_update(spec, b, a, o, space, model)
    return updater


def _saturated_potential(q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(q > 0, np.minimum(PSI_MAX, -np.log(np.where(q > 0, q, 1.0))), PSI_MAX)


def mix_update_error(spec: CorruptionSpec, b: np.ndarray, pi: np.ndarray,
                     space: StateSpace, model: ObservationModel) -> float:
    """Exact c_theta(b) for the mixing family, vectorised over (a, o).

    Only the s* coordinate of each posterior matters for the potential, which
    keeps this O(|A| |O|) after one pass over the table.
    """
    s = space.true_index
    eps = mix_rate(spec, b, space)
    n = b.size
    p = np.full((model.n_actions, model.n_obs), model.eta)
    p[np.arange(model.n_actions), model.table[:, s]] += 1.0 - model.mix
    q = model.predictive(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        q_star = np.where(q > 0, p * b[s] / q, 0.0)
    q_theta = (1.0 - eps) * q_star + eps / n
    gap = _saturated_potential(q_theta) - _saturated_potential(q_star)
    return float(np.sum(pi[:, None] * p * np.where(p > 0, gap, 0.0)))


def estimate_lipschitz_Lpi(policy, sample_pairs, *, tol: float = 1e-12):
    """Empirical max of TV(pi(.|b), pi(.|b')) / ||b - b'||_1 over the pairs.

    Returns ``(value, (b, b'))``; pairs closer than ``tol`` are skipped.
    """
    best, arg = 0.0, None
    for b, b2 in sample_pairs:
        d = l1_distance(b, b2)
        if d <= tol:
            continue
        ratio = tv_distance(policy(b), policy(b2)) / d
        if ratio > best or arg is None:
            best, arg = max(best, ratio), (b, b2)
    return best, arg


def sample_belief_pairs(n_states: int, count: int, rng: np.random.Generator, *,
                        local_scale: float = 0.01, anchors: list | None = None) -> list:
    """Half far-apart Dirichlet pairs, half small perturbations of an anchor belief."""
    pairs = []
    anchors = list(anchors or [])
    for i in range(count):
        if i % 2 == 0:
            pairs.append((rng.dirichlet(np.ones(n_states)), rng.dirichlet(np.ones(n_states))))
            continue
        base = anchors[rng.integers(len(anchors))] if anchors else rng.dirichlet(np.ones(n_states))
        other = rng.dirichlet(np.ones(n_states))
        t = local_scale * rng.random()
        pairs.append((base, (1 - t) * base + t * other))
    return pairs
