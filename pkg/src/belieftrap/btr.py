"""Trap-region constants, the hitting-time bound and empirical entry detection.

Potentials are in nats. Time indices in :func:`hitting_time_bound` are
1-based (the first belief is ``b_1``); series positions elsewhere are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

Z_95 = 1.959963984540054


def compute_bbar(eta: float, L_pi: float) -> float:
    """Lipschitz-derived constant ``2 (-log(eta) * L_pi + 1/eta)``."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if L_pi < 0:
        raise ValueError("L_pi must be non-negative")
    return 2.0 * (-math.log(eta) * L_pi + 1.0 / eta)


@dataclass(frozen=True)
class TheoryConstants:
    eta: float
    L_pi: float
    m_theta: float
    c0: float
    U0: float
    Psi0: float
    mu: float

    @property
    def bbar(self) -> float:
        return compute_bbar(self.eta, self.L_pi)

    @property
    def U(self) -> float | None:
        return compute_threshold_U(self) if self.m_theta > 0 else None

    @property
    def delta(self) -> float:
        """Trap margin; the hitting-time bound needs it positive."""
        return self.m_theta * self.mu - (self.c0 + self.bbar)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(bbar=self.bbar, U=self.U, delta=self.delta)
        return out


def compute_threshold_U(consts: TheoryConstants) -> float:
    if consts.m_theta <= 0:
        raise ValueError(f"m_theta must be positive, got {consts.m_theta}")
    return max(consts.U0, (consts.Psi0 + consts.bbar + consts.c0) / consts.m_theta)


def threshold_from_parts(U0: float, Psi0: float, bbar: float, c0: float, m_theta: float) -> float:
    """Same as :func:`compute_threshold_U` without building a constants object."""
    if m_theta <= 0:
        raise ValueError(f"m_theta must be positive, got {m_theta}")
    return max(U0, (Psi0 + bbar + c0) / m_theta)


def hitting_time_bound(m_theta: float, U: float, delta: float, Delta1: float) -> int:
    if delta <= 0:
        raise ValueError(f"bound needs a positive trap margin, got delta={delta}")
    if m_theta <= 0:
        raise ValueError("m_theta must be positive")
    denom = m_theta * Delta1 + delta
    if denom <= 0:
        raise ValueError("m_theta * Delta1 + delta must be positive")
    arg = (m_theta * U + delta) / denom
    if arg <= 1.0:
        return 1
    return 1 + math.ceil(math.log(arg) / math.log1p(m_theta))


def detect_btr_entry(psi_series: Sequence[float], window: int = 3,
                     min_drift: float = 1e-6) -> int | None:
    """Earliest ``t`` whose trailing ``window`` one-step changes average ``>= -min_drift``.

    Returns a 0-based position in ``psi_series``; the flat stretch it detects
    starts at ``t - window``. ``None`` when no such window exists.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    psi = np.asarray(psi_series, dtype=float)
    if psi.size < window + 1:
        return None
    diffs = np.diff(psi)
    means = np.convolve(diffs, np.ones(window) / window, mode="valid")
    hits = np.flatnonzero(means >= -min_drift)
    return int(hits[0]) + window if hits.size else None


def entry_step(psi_series, window: int = 3, min_drift: float = 1e-6) -> int | None:
    """1-based turn at which the detected flat stretch begins."""
    t = detect_btr_entry(psi_series, window, min_drift)
    return None if t is None else t - window + 1


@dataclass(frozen=True)
class DriftEstimate:
    lo: float
    hi: float
    count: int
    mean: float
    stderr: float

    @property
    def ci_low(self) -> float:
        return self.mean - Z_95 * self.stderr

    @property
    def ci_high(self) -> float:
        return self.mean + Z_95 * self.stderr

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "count": self.count, "mean": self.mean,
                "stderr": self.stderr, "ci_low": self.ci_low, "ci_high": self.ci_high}


def one_step_changes(trajectories) -> tuple[np.ndarray, np.ndarray]:
    """Pooled (Psi_t, Psi_{t+1} - Psi_t) pairs over all trajectories."""
    starts, steps = [], []
    for traj in trajectories:
        psi = np.asarray(traj, dtype=float)
        if psi.size >= 2:
            starts.append(psi[:-1])
            steps.append(np.diff(psi))
    if not starts:
        return np.empty(0), np.empty(0)
    return np.concatenate(starts), np.concatenate(steps)


def estimate_drift(trajectories, psi_bucket_edges) -> list[DriftEstimate | None]:
    """Mean one-step change of Psi per bucket ``[edges[i], edges[i+1])``.

    Empty buckets come back as ``None``. A bucket with a single sample gets an
    infinite standard error.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("need at least one trajectory")
    edges = np.asarray(psi_bucket_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bucket edges must be strictly increasing with at least two entries")
    start, step = one_step_changes(trajectories)
    which = np.searchsorted(edges, start, side="right") - 1
    out = []
    for i in range(edges.size - 1):
        d = step[which == i]
        if d.size == 0:
            out.append(None)
            continue
        se = float(d.std(ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.inf
        out.append(DriftEstimate(float(edges[i]), float(edges[i + 1]), int(d.size),
                                 float(d.mean()), se))
    return out


def fit_update_error_growth(psi, c, U0: float = 0.0) -> tuple[float, float]:
    """Least-squares slope ``m`` of update error against potential, and the
    smallest ``c0 >= 0`` making ``c >= m * psi - c0`` hold on every sample with
    ``psi >= U0``. Returns ``(m, c0)``; ``m`` may come out non-positive.
    """
    psi, c = np.asarray(psi, dtype=float), np.asarray(c, dtype=float)
    if psi.shape != c.shape:
        raise ValueError("psi and c must have the same shape")
    keep = psi >= U0
    psi, c = psi[keep], c[keep]
    if psi.size < 2 or np.ptp(psi) == 0:
        raise ValueError("need at least two distinct potentials at or above U0")
    m = float(np.polyfit(psi, c, 1)[0])
    c0 = max(0.0, float(np.max(m * psi - c)))
    return m, c0
