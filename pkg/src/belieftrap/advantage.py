"""TD errors, GAE (full and truncated), the inversion threshold and value calibration.

Conventions: ``rewards`` has length T, ``values`` has length T + 1 with the
terminal bootstrap ``values[T] = 0`` for episodic rollouts. Arrays may carry a
leading batch axis; the time axis is always last.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CALIBRATION_KINDS = ("identity", "affine", "logistic")


def td_errors(rewards, values, gamma: float = 1.0) -> np.ndarray:
    r, v = np.asarray(rewards, dtype=float), np.asarray(values, dtype=float)
    if v.shape[-1] != r.shape[-1] + 1 or v.shape[:-1] != r.shape[:-1]:
        raise ValueError(f"values must have one more step than rewards: {v.shape} vs {r.shape}")
    return r + gamma * v[..., 1:] - v[..., :-1]


def gae_all(deltas, gamma: float = 1.0, lam: float = 1.0) -> np.ndarray:
    """Advantage estimate for every ``t`` by one backward pass."""
    d = np.asarray(deltas, dtype=float)
    out = np.empty_like(d)
    acc = np.zeros(d.shape[:-1])
    for t in range(d.shape[-1] - 1, -1, -1):
        acc = d[..., t] + gamma * lam * acc
        out[..., t] = acc
    return out


def _discounts(n: int, rate: float) -> np.ndarray:
    return rate ** np.arange(n, dtype=float)


def gae(deltas, gamma: float, lam: float, t: int):
    d = np.asarray(deltas, dtype=float)
    if not 0 <= t < d.shape[-1]:
        raise IndexError(f"t={t} outside [0, {d.shape[-1]})")
    tail = d[..., t:]
    return tail @ _discounts(tail.shape[-1], gamma * lam)


def truncated_gae(deltas, gamma: float, lam: float, t: int, t_S: int):
    """Advantage at ``t`` using only the TD errors before ``t_S``."""
    d = np.asarray(deltas, dtype=float)
    if not 0 <= t < t_S <= d.shape[-1]:
        raise ValueError(f"need 0 <= t < t_S <= T, got t={t}, t_S={t_S}, T={d.shape[-1]}")
    return gae(d[..., :t_S], gamma, lam, t)


def _geometric(start: int, stop: int, rate: float) -> float:
    """sum_{j=start}^{stop-1} rate^j"""
    n = stop - start
    if n <= 0:
        return 0.0
    if rate == 1.0:
        return float(n)
    return rate ** start * (1.0 - rate ** n) / (1.0 - rate)


def geometric_sums(t: int, t_S: int, T: int, gamma: float = 1.0,
                   lam: float = 1.0) -> tuple[float, float]:
    """``(S_pre, S_tail)``: discount mass before ``t_S`` and over the tail up to ``T - 2``."""
    if not 0 <= t < t_S < T:
        raise ValueError(f"need 0 <= t < t_S < T, got t={t}, t_S={t_S}, T={T}")
    rate = gamma * lam
    return _geometric(0, t_S - t, rate), _geometric(t_S - t, T - t - 1, rate)


def inversion_threshold(t: int, t_S: int, T: int, gamma: float = 1.0, lam: float = 1.0) -> float:
    """Smallest ``kappa_V * rho_b`` beyond which the expected advantage at ``t`` turns negative."""
    s_pre, s_tail = geometric_sums(t, t_S, T, gamma, lam)
    if s_tail == 0:
        raise ValueError("empty tail: the threshold is undefined")
    return s_pre / s_tail


@dataclass(frozen=True)
class ValueCalibration:
    """Increasing map from belief-at-truth to value.

    ``affine``: ``scale * x + offset``. ``logistic``: ``1 / (1 + exp(-scale * (x - offset)))``.
    """
    kind: str = "identity"
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in CALIBRATION_KINDS:
            raise ValueError(f"unknown calibration kind {self.kind!r}")
        if self.kind != "identity" and not self.scale > 0:
            raise ValueError("calibration scale must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x.copy()
        if self.kind == "affine":
            return self.scale * x + self.offset
        return 1.0 / (1.0 + np.exp(-self.scale * (x - self.offset)))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return np.ones_like(x)
        if self.kind == "affine":
            return np.full_like(x, self.scale)
        s = self(x)
        return self.scale * s * (1.0 - s)

    @property
    def kappa_V(self) -> float:
        """Minimum derivative on [0, 1]; the logistic slope is unimodal so an endpoint wins."""
        if self.kind == "identity":
            return 1.0
        if self.kind == "affine":
            return self.scale
        return float(min(self.derivative(0.0), self.derivative(1.0)))


def calibrated_values(beliefs_at_true_state, cal: ValueCalibration = ValueCalibration()) -> np.ndarray:
    x = np.asarray(beliefs_at_true_state, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("beliefs at the true state must lie in [0, 1]")
    return cal(x)


def check_sparse(rewards) -> None:
    """Only the last step of a rollout may carry reward."""
    r = np.asarray(rewards, dtype=float)
    if np.any(r[..., :-1] != 0):
        raise ValueError("non-terminal rewards are not allowed (sparse-reward convention)")


@dataclass
class AdvantageReport:
    deltas: np.ndarray
    A_hat: np.ndarray
    A_hat_pre: np.ndarray       # nan for t >= t_S
    t_S: int
    S_pre: np.ndarray           # nan where undefined
    S_tail: np.ndarray
    bound_rhs: np.ndarray
    rho_b: float | None = None
    kappa_V: float = 1.0

    def rows(self):
        for t in range(self.deltas.size):
            yield {"t": t, "delta": self.deltas[t], "A_hat": self.A_hat[t],
                   "A_hat_pre": self.A_hat_pre[t], "t_S": self.t_S,
                   "S_pre": self.S_pre[t], "S_tail": self.S_tail[t], "bound_rhs": self.bound_rhs[t]}


def advantage_report(rewards, beliefs_at_true_state, t_S: int | None, *, gamma: float = 1.0,
                     lam: float = 1.0, cal: ValueCalibration = ValueCalibration(),
                     rho_b: float | None = None) -> AdvantageReport:
    """Per-step advantages for one rollout.

    ``t_S`` defaults to the rollout length (nothing removed). ``rho_b`` feeds
    the bound column; when omitted it is measured as the mean per-step drop of
    the belief at the truth after ``t_S``.
    """
    r = np.asarray(rewards, dtype=float)
    check_sparse(r)
    T = r.size
    values = np.append(calibrated_values(beliefs_at_true_state, cal), 0.0)
    if values.size != T + 1:
        raise ValueError("need one belief per step")
    t_S = T if t_S is None else int(t_S)
    if not 0 < t_S <= T:
        raise ValueError(f"t_S={t_S} outside (0, {T}]")
    deltas = td_errors(r, values, gamma)
    full = gae_all(deltas, gamma, lam)
    pre = np.full(T, np.nan)
    pre[:t_S] = gae_all(deltas[:t_S], gamma, lam)
    if rho_b is None and t_S < T - 1:
        x = np.asarray(beliefs_at_true_state, dtype=float)
        rho_b = float((x[t_S] - x[T - 1]) / (T - 1 - t_S))
    s_pre, s_tail, rhs = (np.full(T, np.nan) for _ in range(3))
    if t_S < T:
        for t in range(t_S):
            s_pre[t], s_tail[t] = geometric_sums(t, t_S, T, gamma, lam)
        if rho_b is not None:
            rhs = gamma * (s_pre - cal.kappa_V * rho_b * s_tail)
    return AdvantageReport(deltas, full, pre, t_S, s_pre, s_tail, rhs, rho_b, cal.kappa_V)


@dataclass(frozen=True)
class SyntheticDrift:
    """Belief-at-truth process: rise from ``b0`` to ``b_peak`` over ``pre_steps``
    (plus optional Gaussian jitter), then fall by exactly ``rho_b`` per step for
    ``tail_steps`` steps. The terminal reward is Bernoulli in the final value.
    """
    rho_b: float
    pre_steps: int = 2
    tail_steps: int = 10
    b0: float = 0.0
    b_peak: float = 1.0
    noise: float = 0.0

    def __post_init__(self):
        if self.pre_steps < 1 or self.tail_steps < 1:
            raise ValueError("pre_steps and tail_steps must be positive")
        if self.rho_b < 0 or self.noise < 0:
            raise ValueError("rho_b and noise must be non-negative")
        if not 0 <= self.b0 <= 1 or not 0 <= self.b_peak <= 1:
            raise ValueError("b0 and b_peak must lie in [0, 1]")

    @property
    def t_S(self) -> int:
        return self.pre_steps

    @property
    def horizon(self) -> int:
        return self.pre_steps + self.tail_steps + 1


@dataclass
class DriftBatch:
    beliefs: np.ndarray   # (n, T), clipped to [0, 1]
    rewards: np.ndarray   # (n, T), only the last column non-zero
    clipped: np.ndarray   # (n,) True where the unclipped path left [0, 1]
    config: SyntheticDrift

    @property
    def clip_count(self) -> int:
        return int(self.clipped.sum())


def generate_drift(cfg: SyntheticDrift, n: int, rng: np.random.Generator,
                   cal: ValueCalibration = ValueCalibration(), *, tol: float = 1e-12) -> DriftBatch:
    T, tS = cfg.horizon, cfg.t_S
    x = np.empty((n, T))
    x[:, 0] = cfg.b0
    ramp = np.linspace(cfg.b0, cfg.b_peak, cfg.pre_steps + 1)[1:]
    x[:, 1:tS + 1] = ramp + cfg.noise * rng.standard_normal((n, cfg.pre_steps))
    x[:, tS + 1:] = x[:, [tS]] - cfg.rho_b * np.arange(1, cfg.tail_steps + 1)
    clipped = np.any((x < -tol) | (x > 1 + tol), axis=1)
    x = np.clip(x, 0.0, 1.0)
    rewards = np.zeros((n, T))
    rewards[:, -1] = rng.random(n) < np.clip(cal(x[:, -1]), 0.0, 1.0)
    check_sparse(rewards)
    return DriftBatch(x, rewards, clipped, cfg)


def drift_advantages(batch: DriftBatch, cal: ValueCalibration = ValueCalibration(),
                     gamma: float = 1.0, lam: float = 1.0, t: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-run ``(A_hat_t, A_hat_pre_t)`` over the unclipped runs only."""
    keep = ~batch.clipped
    x, r = batch.beliefs[keep], batch.rewards[keep]
    values = np.concatenate([cal(x), np.zeros((x.shape[0], 1))], axis=1)
    d = td_errors(r, values, gamma)
    return gae(d, gamma, lam, t), truncated_gae(d, gamma, lam, t, batch.config.t_S)


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
