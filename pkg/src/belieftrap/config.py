"""Experiment configuration: nested dataclasses loaded from YAML.

Overrides use dotted keys (``agent.corruption.slope=0.5``) and are applied to
the raw mapping before validation, so a flag and its config-file equivalent go
through the same checks.
"""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .advantage import ValueCalibration
from .agents import CorruptionSpec, PolicySpec
from .truncation import TruncationRule

ENV_KINDS = ("gn", "cd", "pe", "synthetic")
DEFAULT_HORIZON = {"gn": 10, "cd": 10, "pe": 10, "synthetic": 13}
SUITES = ("thm1-drift", "hitting-time", "thm2-sign", "cor1")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnvironmentConfig:
    """Task family plus how to draw instances.

    ``params`` by kind: gn ``num_digits, num_symbols``; cd ``num_candidates,
    num_inputs, num_labels, distinct``; pe ``dimension, grid_levels,
    num_movies``; synthetic ``rho_b, pre_steps, tail_steps, b0, b_peak, noise``.
    ``instance_path`` pins one instance file for every rollout.
    """
    kind: str = "gn"
    preset: str | None = None
    params: dict = field(default_factory=dict)
    eta: float = 0.0
    answer_confidence: float = 0.95
    instance_path: str | None = None


@dataclass(frozen=True)
class AgentConfig:
    policy: PolicySpec = field(default_factory=PolicySpec)
    corruption: CorruptionSpec = field(default_factory=CorruptionSpec)


@dataclass(frozen=True)
class AnalysisConfig:
    window: int = 3
    min_drift: float = 1e-6
    psi_edges: tuple = (1e-9, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 50.0)
    U0: float = 0.0
    lipschitz_pairs: int = 200


@dataclass(frozen=True)
class SweepConfig:
    key: str | None = None
    values: tuple = ()


@dataclass(frozen=True)
class VerifyConfig:
    suite: str | None = None
    rho_grid: tuple = (0.1, 0.15, 0.2, 0.25, 0.3)
    trajectories: int = 10_000
    drift_ci_floor: float = -0.01
    conformance: float = 0.95
    min_configs: int = 3
    candidates: tuple = ()   # override mappings for the hitting-time suite


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    truncation: TruncationRule = field(default_factory=TruncationRule)
    horizon: int | None = None
    rollouts: int = 100
    seed: int = 0
    gamma: float = 1.0
    lam: float = 1.0
    calibration: ValueCalibration = field(default_factory=ValueCalibration)
    output_dir: str = "runs/default"
    workers: int = 1
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, raw, where: str):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in raw.items():
        sub = _NESTED.get((cls, name))
        if sub is not None:
            value = _build(sub, value, f"{where}.{name}")
        elif isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_NESTED = {
    (ExperimentConfig, "environment"): EnvironmentConfig,
    (ExperimentConfig, "agent"): AgentConfig,
    (ExperimentConfig, "truncation"): TruncationRule,
    (ExperimentConfig, "calibration"): ValueCalibration,
    (ExperimentConfig, "analysis"): AnalysisConfig,
    (ExperimentConfig, "sweep"): SweepConfig,
    (ExperimentConfig, "verify"): VerifyConfig,
    (AgentConfig, "policy"): PolicySpec,
    (AgentConfig, "corruption"): CorruptionSpec,
}


def set_dotted(raw: dict, key: str, value) -> dict:
    """Return a copy of ``raw`` with ``a.b.c`` set to ``value``."""
    out = copy.deepcopy(raw)
    node = out
    parts = key.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        elif not isinstance(child, dict):
            raise ConfigError(f"cannot set {key!r}: {part!r} is not a section")
        node = child
    node[parts[-1]] = value
    return out


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value parsed as YAML (so numbers and lists work)."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        return key.strip(), yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r}: {exc}") from exc


def config_from_dict(raw: dict | None, overrides=()) -> ExperimentConfig:
    raw = copy.deepcopy(raw or {})
    for key, value in overrides:
        raw = set_dotted(raw, key, value)
    cfg = _build(ExperimentConfig, raw, "config")
    validate(cfg)
    return cfg


def load_config(path, overrides=()) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, overrides)


def horizon_of(cfg: ExperimentConfig) -> int:
    if cfg.horizon is not None:
        return cfg.horizon
    if cfg.environment.kind == "synthetic":
        p = cfg.environment.params
        return int(p.get("pre_steps", 2)) + int(p.get("tail_steps", 10)) + 1
    return DEFAULT_HORIZON[cfg.environment.kind]


def validate(cfg: ExperimentConfig) -> None:
    env = cfg.environment
    if env.kind not in ENV_KINDS:
        raise ConfigError(f"environment.kind must be one of {ENV_KINDS}, got {env.kind!r}")
    if not 0.0 <= env.eta <= 1.0:
        raise ConfigError("environment.eta must lie in [0, 1]")
    if not 0.0 < env.answer_confidence <= 1.0:
        raise ConfigError("environment.answer_confidence must lie in (0, 1]")
    if cfg.horizon is not None and cfg.horizon < 1:
        raise ConfigError("horizon must be at least 1")
    if cfg.rollouts < 1:
        raise ConfigError("rollouts must be at least 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if not (0 <= cfg.gamma <= 1 and 0 <= cfg.lam <= 1):
        raise ConfigError("gamma and lam must lie in [0, 1]")
    if cfg.truncation.kind == "gn_consistency" and env.kind != "gn":
        raise ConfigError("gn_consistency truncation needs a gn environment")
    if cfg.truncation.kind == "pe_sim_drop" and env.kind != "pe":
        raise ConfigError("pe_sim_drop truncation needs a pe environment")
    if cfg.verify.suite is not None and cfg.verify.suite not in SUITES:
        raise ConfigError(f"unknown verification suite {cfg.verify.suite!r}; known: {SUITES}")
    if cfg.verify.trajectories < 1:
        raise ConfigError("verify.trajectories must be at least 1")
    if cfg.analysis.window < 1:
        raise ConfigError("analysis.window must be at least 1")
