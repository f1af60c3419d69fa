"""One seeded episode: agent and oracle beliefs side by side, plus the hypothesis set."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agents import corrupted_update, policy_distribution
from .belief import bayes_update, potential, uniform
from .config import ExperimentConfig, horizon_of
from .envs import GN_PRESETS, load_instance, make_task
from .envs.circuits import CircuitInstance, random_candidate_pool
from .envs.guess_numbers import gn_sample_instance
from .envs.preference import PreferenceInstance, grid_levels, random_movies, similarity_or_zero
from .hypotheses import EmptyHypothesisSetError, filter_consistent, init_full, progress
from .truncation import TurnSignal


def rollout_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def sample_instance(env, rng: np.random.Generator):
    """Draw an instance for ``env`` (an :class:`EnvironmentConfig`)."""
    if env.instance_path:
        return load_instance(env.instance_path)
    p = dict(env.params)
    if env.kind == "gn":
        if env.preset:
            if env.preset not in GN_PRESETS:
                raise ValueError(f"unknown preset {env.preset!r}")
            a, b, x, y = GN_PRESETS[env.preset]
            return gn_sample_instance(a, b, rng, (x, y))
        return gn_sample_instance(int(p.get("num_digits", 3)), int(p.get("num_symbols", 5)), rng)
    if env.kind == "cd":
        n_in, n_cand = int(p.get("num_inputs", 3)), int(p.get("num_candidates", 10))
        labels = [f"C{i}" for i in range(int(p.get("num_labels", 2)))]
        pool = random_candidate_pool(n_cand, n_in, rng)
        if p.get("distinct", False):
            picks = rng.choice(n_cand, size=len(labels), replace=False)
        else:
            picks = rng.integers(n_cand, size=len(labels))
        return CircuitInstance(pool, {lab: int(i) for lab, i in zip(labels, picks)}, n_in)
    if env.kind == "pe":
        dim, levels = int(p.get("dimension", 3)), int(p.get("grid_levels", 6))
        vals = grid_levels(levels)
        weights = tuple(float(v) for v in rng.choice(vals[1:], size=dim))  # non-zero vector
        movies = random_movies(int(p.get("num_movies", 6)), dim, rng)
        return PreferenceInstance(weights, movies, levels)
    raise ValueError(f"cannot sample instances for kind {env.kind!r}")


@dataclass
class Turn:
    action: object
    observation: object
    agent_b_true: float
    oracle_b_true: float
    psi: float
    psi_oracle: float
    h_size: int
    progress: int
    consistent: bool | None
    similarity_gain: float | None
    truncate: bool

    def to_dict(self) -> dict:
        return {"action": _plain(self.action), "observation": _plain(self.observation),
                "agent_b_true": self.agent_b_true, "oracle_b_true": self.oracle_b_true,
                "psi": self.psi, "psi_oracle": self.psi_oracle, "h_size": self.h_size,
                "progress": self.progress, "consistent": self.consistent,
                "similarity_gain": self.similarity_gain, "truncate": self.truncate}


@dataclass
class TrajectoryRecord:
    rollout: int
    seed: int
    instance: dict
    init: dict
    turns: list = field(default_factory=list)
    reward: float = 0.0
    success: bool = False
    truncated: bool = False
    t_S: int | None = None
    stop: str = "horizon"
    # not serialised: full belief vectors, index 0 is the pre-action belief
    agent_beliefs: list = field(default_factory=list, repr=False)
    oracle_beliefs: list = field(default_factory=list, repr=False)

    @property
    def n_turns(self) -> int:
        return len(self.turns)

    def psi_series(self) -> list[float]:
        return [self.init["psi"]] + [t.psi for t in self.turns]

    def oracle_psi_series(self) -> list[float]:
        return [self.init["psi_oracle"]] + [t.psi_oracle for t in self.turns]

    def agent_b_true_series(self) -> list[float]:
        return [self.init["agent_b_true"]] + [t.agent_b_true for t in self.turns]

    def rewards(self) -> list[float]:
        r = [0.0] * self.n_turns
        if r:
            r[-1] = self.reward
        return r

    def to_dict(self) -> dict:
        return {"rollout": self.rollout, "seed": self.seed, "instance": self.instance,
                "init": self.init, "turns": [t.to_dict() for t in self.turns],
                "n_turns": self.n_turns, "reward": self.reward, "success": self.success,
                "truncated": self.truncated, "t_S": self.t_S, "stop": self.stop}


def _plain(x):
    if isinstance(x, tuple):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def _snapshot(b, b_star, space, h_size) -> dict:
    s = space.true_index
    return {"agent_b_true": float(b[s]), "oracle_b_true": float(b_star[s]),
            "psi": potential(b, space), "psi_oracle": potential(b_star, space), "h_size": h_size}


def rollout(cfg: ExperimentConfig, index: int, *, keep_beliefs: bool = False) -> TrajectoryRecord:
    """Episode ``index`` of the experiment; fully determined by ``(cfg, index)``."""
    rng = rollout_rng(cfg.seed, index)
    instance = sample_instance(cfg.environment, rng)
    task = make_task(instance, cfg.environment.eta, bool(cfg.environment.params.get("distinct", False)))
    space, model = task.space, task.model
    spec_pi, spec_c = cfg.agent.policy, cfg.agent.corruption
    b = uniform(space.size)
    b_star = b.copy()
    h = init_full(space)
    for a0, o0 in task.initial_evidence:
        b = bayes_update(b, a0, o0, model)
        b_star = bayes_update(b_star, a0, o0, model)
        h = filter_consistent(h, model.actions[a0], model.alphabet[o0], task.evaluate, space)

    rec = TrajectoryRecord(index, cfg.seed, instance.to_dict(), _snapshot(b, b_star, space, len(h)))
    if keep_beliefs:
        rec.agent_beliefs.append(b)
        rec.oracle_beliefs.append(b_star)
    signals: list[TurnSignal] = []
    v_star = np.asarray(space.true_state, dtype=float) if task.kind == "pe" else None
    horizon = horizon_of(cfg)

    for t in range(horizon):
        pi = policy_distribution(spec_pi, b, None, space, model, turn=t,
                                 action_states=task.action_states)
        a = int(rng.choice(model.n_actions, p=pi))
        action = model.actions[a]
        obs = task.observe(action)
        o = model.obs_index(obs)
        b_next = corrupted_update(spec_c, b, a, o, space, model)
        b_star = bayes_update(b_star, a, o, model)
        h_next = filter_consistent(h, action, obs, task.evaluate, space)
        if not h_next.members:
            raise EmptyHypothesisSetError(
                f"rollout {index}: no hypothesis consistent after turn {t + 1} "
                f"(action={action!r}, observation={obs!r})")
        consistent = None
        if task.action_states is not None:
            consistent = int(task.action_states[a]) in h
        gain = None
        if v_star is not None:
            gain = (similarity_or_zero(task.estimate(b_next), v_star)
                    - similarity_or_zero(task.estimate(b), v_star))
        signals.append(TurnSignal(progress=progress(h, h_next), feedback_label=str(obs),
                                  similarity_gain=gain,
                                  query_vector=tuple(task.action_features[a]),
                                  action_consistent=consistent))
        cut = cfg.truncation.verdict(signals, stream=(cfg.seed, index))
        snap = _snapshot(b_next, b_star, space, len(h_next))
        rec.turns.append(Turn(action, obs, snap["agent_b_true"], snap["oracle_b_true"], snap["psi"],
                              snap["psi_oracle"], snap["h_size"], signals[-1].progress, consistent,
                              gain, cut))
        b, h = b_next, h_next
        if keep_beliefs:
            rec.agent_beliefs.append(b)
            rec.oracle_beliefs.append(b_star)
        if cut:
            rec.truncated, rec.t_S, rec.stop = True, t + 1, "truncated"
            break
        if task.kind == "gn":
            if task.is_win(a):
                rec.reward, rec.stop = 1.0, "win"
                break
            continue
        if b.max() >= cfg.environment.answer_confidence or t == horizon - 1:
            rec.reward = task.answer_reward(b)
            rec.stop = "submit" if t < horizon - 1 else "horizon"
            break
    rec.success = rec.reward > 0
    return rec
