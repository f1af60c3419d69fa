"""Experiment orchestration: rollouts, persisted reports, sweeps and theory checks."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .advantage import (SyntheticDrift, advantage_report, drift_advantages, generate_drift,
                        geometric_sums, inversion_threshold, mean_and_se)
from .agents import (CorruptionSpec, make_policy, mix_update_error, policy_distribution,
                     estimate_lipschitz_Lpi, sample_belief_pairs)
from .belief import potential
from .btr import (TheoryConstants, compute_bbar, detect_btr_entry, entry_step, estimate_drift,
                  fit_update_error_growth, hitting_time_bound)
from .config import ExperimentConfig, config_from_dict, horizon_of
from .envs import instance_from_dict, make_task
from .rollout import TrajectoryRecord, rollout, rollout_rng

SUMMARY_COLUMNS = ("label", "rollouts", "success_rate", "mean_turns", "total_turns_token_surrogate",
                   "truncation_frequency", "success_rate_non_truncated", "mean_reward", "mean_A0",
                   "clipped_runs")
LIPSCHITZ_STREAM = 2**31  # rollout indices stay below this
ADVANTAGE_COLUMNS = ("rollout", "t", "delta", "A_hat", "A_hat_pre", "t_S", "S_pre", "S_tail",
                     "bound_rhs")


class ExperimentIOError(OSError):
    pass


# ---------------------------------------------------------------- rollouts

def _one(args):
    cfg, index, keep = args
    return rollout(cfg, index, keep_beliefs=keep)


def run_rollouts(cfg: ExperimentConfig, *, keep_beliefs: bool = False) -> list[TrajectoryRecord]:
    """All rollouts of ``cfg`` in index order, optionally across worker processes."""
    jobs = [(cfg, i, keep_beliefs) for i in range(cfg.rollouts)]
    if cfg.workers == 1:
        return [_one(j) for j in jobs]
    with ProcessPoolExecutor(cfg.workers) as pool:
        return list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))


def btr_step(rec: TrajectoryRecord, window: int, min_drift: float) -> int | None:
    """Step index (into the rollout's turns) where the detected flat stretch starts."""
    t = detect_btr_entry(rec.psi_series(), window, min_drift)
    return None if t is None else t - window


def trajectory_advantages(rec: TrajectoryRecord, cfg: ExperimentConfig):
    if rec.n_turns == 0:
        return None
    t_S = None
    if not rec.truncated:
        p = btr_step(rec, cfg.analysis.window, cfg.analysis.min_drift)
        if p is not None and 0 < p < rec.n_turns:
            t_S = p
    beliefs = rec.agent_b_true_series()[:rec.n_turns]
    return advantage_report(rec.rewards(), beliefs, t_S, gamma=cfg.gamma, lam=cfg.lam,
                            cal=cfg.calibration)


# ---------------------------------------------------------------- theory report

def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, np.generic):
        return _finite(x.item())
    return x


def theory_report(cfg: ExperimentConfig, records: list[TrajectoryRecord]) -> dict:
    """Fitted growth constants, B-bar, U, the trap margin and per-rollout hitting checks.

    ``records`` must carry belief vectors (``keep_beliefs=True``). Rollouts with
    no detected entry count as violating the hitting-time bound.
    """
    an = cfg.analysis
    spec_pi, spec_c = cfg.agent.policy, cfg.agent.corruption
    psi_fit, c_fit, anchors = [], [], []
    task0 = None
    for rec in records:
        task = make_task(instance_from_dict(rec.instance), cfg.environment.eta,
                         bool(cfg.environment.params.get("distinct", False)))
        task0 = task0 or task
        for b in rec.agent_beliefs[:rec.n_turns]:
            pi = policy_distribution(spec_pi, b, None, task.space, task.model,
                                     action_states=task.action_states)
            psi_fit.append(potential(b, task.space))
            c_fit.append(mix_update_error(spec_c, b, pi, task.space, task.model))
            if len(anchors) < 64:
                anchors.append(b)

    entries = [entry_step(r.psi_series(), an.window, an.min_drift) for r in records]
    pre_entry_min = []
    for rec, e in zip(records, entries):
        series = rec.oracle_psi_series()
        stop = len(series) if e is None else max(1, e)
        pre_entry_min.append(min(series[:stop]))
    report = {
        "rollouts": len(records),
        "eta": cfg.environment.eta,
        "Psi0": max(r.init["psi_oracle"] for r in records),
        "mu": min(pre_entry_min),
        "U0": an.U0,
        "fit_samples": len(psi_fit),
        "entry_steps": entries,
        "entry_rate": float(np.mean([e is not None for e in entries])),
        "notes": [],
    }

    policy = make_policy(spec_pi, task0.space, task0.model, action_states=task0.action_states)
    pairs = sample_belief_pairs(task0.space.size, an.lipschitz_pairs,
                                rollout_rng(cfg.seed, LIPSCHITZ_STREAM), anchors=anchors)
    L_pi, _ = estimate_lipschitz_Lpi(policy, pairs)
    report["L_pi"] = L_pi

    try:
        m, c0 = fit_update_error_growth(psi_fit, c_fit, an.U0)
    except ValueError as exc:
        report["notes"].append(f"growth fit unavailable: {exc}")
        m = c0 = None
    report["m_theta"], report["c0"] = m, c0

    report.update(bbar=None, U=None, delta=None, hitting_bound=None, conformance=None)
    if cfg.environment.eta <= 0:
        report["notes"].append("eta = 0: the Lipschitz constant B-bar is undefined")
        return _finite(report)
    report["bbar"] = compute_bbar(cfg.environment.eta, L_pi)
    if m is None:
        return _finite(report)
    consts = TheoryConstants(cfg.environment.eta, L_pi, m, c0, an.U0, report["Psi0"], report["mu"])
    report["delta"] = consts.delta
    if m <= 0:
        report["notes"].append("fitted growth slope is not positive: U is undefined")
        return _finite(report)
    report["U"] = consts.U
    if consts.delta <= 0:
        report["notes"].append("trap margin delta <= 0: hitting-time bound does not apply")
        return _finite(report)
    bounds, ok = [], []
    for rec, e in zip(records, entries):
        d1 = rec.init["psi"] - rec.init["psi_oracle"]
        bound = hitting_time_bound(m, consts.U, consts.delta, d1)
        bounds.append(bound)
        ok.append(e is not None and e <= bound)
    report["hitting_bound"] = bounds
    report["conformance"] = float(np.mean(ok))
    return _finite(report)


# ---------------------------------------------------------------- persistence

def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise ExperimentIOError(f"cannot write {path}: {exc}") from exc


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return x


def summarize(records: list[TrajectoryRecord], reports, label: str = "") -> dict:
    n = len(records)
    turns = [r.n_turns for r in records]
    kept = [r for r in records if not r.truncated]
    a0 = [rep.A_hat[0] for rep in reports if rep is not None]
    return {
        "label": label,
        "rollouts": n,
        "success_rate": float(np.mean([r.success for r in records])),
        "mean_turns": float(np.mean(turns)),
        "total_turns_token_surrogate": int(sum(turns)),
        "truncation_frequency": float(np.mean([r.truncated for r in records])),
        "success_rate_non_truncated": float(np.mean([r.success for r in kept])) if kept else None,
        "mean_reward": float(np.mean([r.reward for r in records])),
        "mean_A0": float(np.mean(a0)) if a0 else None,
        "clipped_runs": 0,
    }


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExperimentIOError(f"cannot create output directory {out}: {exc}") from exc
    return out


def run_experiment(cfg: ExperimentConfig, label: str = "") -> dict:
    """Run every rollout and write trajectories.jsonl, advantage.csv,
    constants.json and summary.csv. Returns the summary row."""
    if cfg.environment.kind == "synthetic":
        return _run_synthetic(cfg, label)
    out = _out_dir(cfg)
    records = run_rollouts(cfg, keep_beliefs=True)
    lines = [json.dumps(r.to_dict(), separators=(",", ":")) for r in records]
    _write(out / "trajectories.jsonl", "\n".join(lines) + "\n")
    reports = [trajectory_advantages(r, cfg) for r in records]
    rows = []
    for rec, rep in zip(records, reports):
        if rep is not None:
            rows.extend({"rollout": rec.rollout, **row} for row in rep.rows())
    _write(out / "advantage.csv", _csv_text(ADVANTAGE_COLUMNS, rows))
    constants = theory_report(cfg, records)
    _write(out / "constants.json", json.dumps(constants, indent=2, sort_keys=True) + "\n")
    summary = summarize(records, reports, label)
    _write(out / "summary.csv", _csv_text(SUMMARY_COLUMNS, [summary]))
    return summary


def drift_config(cfg: ExperimentConfig, rho_b: float | None = None) -> SyntheticDrift:
    p = dict(cfg.environment.params)
    if rho_b is not None:
        p["rho_b"] = rho_b
    return SyntheticDrift(float(p.get("rho_b", 0.1)), int(p.get("pre_steps", 2)),
                          int(p.get("tail_steps", 10)), float(p.get("b0", 0.0)),
                          float(p.get("b_peak", 1.0)), float(p.get("noise", 0.0)))


def _run_synthetic(cfg: ExperimentConfig, label: str) -> dict:
    out = _out_dir(cfg)
    drift = drift_config(cfg)
    batch = generate_drift(drift, cfg.rollouts, rollout_rng(cfg.seed, 0), cfg.calibration)
    lines, rows, a0 = [], [], []
    for i in range(cfg.rollouts):
        rec = {"rollout": i, "seed": cfg.seed, "beliefs": batch.beliefs[i].tolist(),
               "reward": float(batch.rewards[i, -1]), "clipped": bool(batch.clipped[i]),
               "t_S": drift.t_S}
        lines.append(json.dumps(rec, separators=(",", ":")))
        rep = advantage_report(batch.rewards[i], batch.beliefs[i], drift.t_S, gamma=cfg.gamma,
                               lam=cfg.lam, cal=cfg.calibration, rho_b=drift.rho_b)
        rows.extend({"rollout": i, **row} for row in rep.rows())
        if not batch.clipped[i]:
            a0.append(rep.A_hat[0])
    _write(out / "trajectories.jsonl", "\n".join(lines) + "\n")
    _write(out / "advantage.csv", _csv_text(ADVANTAGE_COLUMNS, rows))
    T = drift.horizon
    constants = {"t_S": drift.t_S, "horizon": T, "rho_b": drift.rho_b,
                 "kappa_V": cfg.calibration.kappa_V,
                 "S_pre_S_tail": list(geometric_sums(0, drift.t_S, T, cfg.gamma, cfg.lam)),
                 "inversion_threshold": inversion_threshold(0, drift.t_S, T, cfg.gamma, cfg.lam),
                 "clipped_runs": batch.clip_count}
    _write(out / "constants.json", json.dumps(_finite(constants), indent=2, sort_keys=True) + "\n")
    summary = {"label": label, "rollouts": cfg.rollouts,
               "success_rate": float(batch.rewards[:, -1].mean()), "mean_turns": float(T),
               "total_turns_token_surrogate": T * cfg.rollouts, "truncation_frequency": 0.0,
               "success_rate_non_truncated": float(batch.rewards[:, -1].mean()),
               "mean_reward": float(batch.rewards[:, -1].mean()),
               "mean_A0": float(np.mean(a0)) if a0 else None, "clipped_runs": batch.clip_count}
    _write(out / "summary.csv", _csv_text(SUMMARY_COLUMNS, [summary]))
    return summary


def with_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    return config_from_dict(cfg.to_dict(), list(overrides.items()))


def sweep(cfg: ExperimentConfig) -> list[dict]:
    """One sub-run per value of ``cfg.sweep.key``; writes sweep_summary.csv."""
    if not cfg.sweep.key or not cfg.sweep.values:
        raise ValueError("sweep needs sweep.key and a non-empty sweep.values")
    root = _out_dir(cfg)
    rows = []
    for value in cfg.sweep.values:
        label = f"{cfg.sweep.key}={value}"
        sub = with_overrides(cfg, {cfg.sweep.key: value, "output_dir": str(root / label)})
        rows.append(run_experiment(sub, label))
    _write(root / "sweep_summary.csv", _csv_text(SUMMARY_COLUMNS, rows))
    return rows


# ---------------------------------------------------------------- verification suites

def _check(name: str, passed: bool, **stats) -> dict:
    return {"check": name, "passed": bool(passed), **stats}


def drift_suite(cfg: ExperimentConfig) -> dict:
    """Trap buckets above U drift upward for the corrupted agent; the oracle drifts down.

    A trap check with no populated bucket above U fails rather than passing
    vacuously.
    """
    an, v = cfg.analysis, cfg.verify
    records = run_rollouts(cfg, keep_beliefs=True)
    consts = theory_report(cfg, records)
    buckets = estimate_drift([r.psi_series() for r in records], an.psi_edges)
    oracle_cfg = replace(cfg, agent=replace(cfg.agent, corruption=CorruptionSpec()))
    oracle = run_rollouts(oracle_cfg)
    oracle_buckets = estimate_drift([r.psi_series() for r in oracle], an.psi_edges)

    U = consts["U"]
    above = [b for b in buckets if b is not None and U is not None and b.lo >= U]
    trap_ok = bool(above) and all(b.mean >= 0 and b.ci_low > v.drift_ci_floor for b in above)
    populated = [b for b in oracle_buckets if b is not None]
    oracle_ok = bool(populated) and all(b.mean < 0 for b in populated)
    checks = [
        _check("trap-drift-above-U", trap_ok, U=U, buckets_above_U=len(above),
               buckets=[b.to_dict() for b in above]),
        _check("oracle-drift-negative", oracle_ok, buckets=[b.to_dict() for b in populated]),
    ]
    return {"constants": consts, "agent_buckets": [b and b.to_dict() for b in buckets],
            "checks": checks}


def hitting_suite(cfg: ExperimentConfig) -> dict:
    """Conformance of detected entry steps with the hitting-time bound.

    Each ``verify.candidates`` entry is an override mapping; only candidates
    with a positive fitted trap margin are eligible.
    """
    v = cfg.verify
    candidates = v.candidates or ({},)
    results = []
    for overrides in candidates:
        sub = with_overrides(cfg, dict(overrides))
        rep = theory_report(sub, run_rollouts(sub, keep_beliefs=True))
        results.append({"overrides": dict(overrides), "m_theta": rep["m_theta"], "c0": rep["c0"],
                        "bbar": rep["bbar"], "mu": rep["mu"], "U": rep["U"],
                        "delta": rep["delta"], "conformance": rep["conformance"],
                        "notes": rep["notes"]})
    eligible = [r for r in results if r["delta"] is not None and r["delta"] > 0
                and r["conformance"] is not None]
    deltas = [r["delta"] for r in results if r["delta"] is not None]
    checks = [
        _check("configs-with-positive-margin", len(eligible) >= v.min_configs,
               eligible=len(eligible), required=v.min_configs,
               max_delta=max(deltas) if deltas else None),
        _check("entry-within-bound", bool(eligible) and all(r["conformance"] >= v.conformance
                                                            for r in eligible),
               rates=[r["conformance"] for r in eligible], required=v.conformance),
    ]
    return {"candidates": results, "checks": checks}


def _drift_points(cfg: ExperimentConfig):
    v = cfg.verify
    rng = rollout_rng(cfg.seed, 0)
    for rho in v.rho_grid:
        drift = drift_config(cfg, rho)
        batch = generate_drift(drift, v.trajectories, rng, cfg.calibration)
        full, pre = drift_advantages(batch, cfg.calibration, cfg.gamma, cfg.lam, 0)
        yield rho, drift, batch, full, pre


def sign_suite(cfg: ExperimentConfig) -> dict:
    """Mean advantage at t = 0 changes sign across the inversion threshold."""
    kappa = cfg.calibration.kappa_V
    points, checks = [], []
    for rho, drift, batch, full, _ in _drift_points(cfg):
        T = drift.horizon
        thr = inversion_threshold(0, drift.t_S, T, cfg.gamma, cfg.lam) / kappa
        s_pre, s_tail = geometric_sums(0, drift.t_S, T, cfg.gamma, cfg.lam)
        mean, se = mean_and_se(full)
        point = {"rho_b": rho, "threshold": thr, "used": int(full.size),
                 "clipped": batch.clip_count, "mean_A0": mean, "stderr": se,
                 "bound_rhs": cfg.gamma * (s_pre - kappa * rho * s_tail)}
        points.append(point)
        if full.size == 0:
            checks.append(_check(f"rho={rho}", False, reason="every run clipped", **point))
        elif math.isclose(rho, thr, rel_tol=1e-9):
            checks.append(_check(f"rho={rho}", abs(mean) <= 3 * se, expect="|mean| <= 3se", **point))
        elif rho < thr:
            checks.append(_check(f"rho={rho}", mean > 0, expect="mean > 0", **point))
        else:
            checks.append(_check(f"rho={rho}", mean < 0, expect="mean < 0", **point))
        if full.size:
            checks.append(_check(f"bound rho={rho}", mean <= point["bound_rhs"] + 3 * se,
                                 expect="mean <= bound + 3se", mean=mean,
                                 bound=point["bound_rhs"], stderr=se))
    return {"points": points, "checks": checks}


def gap_suite(cfg: ExperimentConfig) -> dict:
    """Truncation removes at least the predicted tail bias."""
    kappa = cfg.calibration.kappa_V
    checks = []
    for rho, drift, batch, full, pre in _drift_points(cfg):
        _, s_tail = geometric_sums(0, drift.t_S, drift.horizon, cfg.gamma, cfg.lam)
        predicted = cfg.gamma * kappa * rho * s_tail
        gap = pre - full
        mean, se = mean_and_se(gap)
        stats = {"rho_b": rho, "used": int(gap.size), "clipped": batch.clip_count,
                 "mean_gap": mean, "stderr": se, "predicted": predicted}
        if gap.size == 0:
            checks.append(_check(f"rho={rho}", False, reason="every run clipped", **stats))
        else:
            checks.append(_check(f"rho={rho}", mean >= predicted - 3 * se, **stats))
    return {"checks": checks}


SUITE_RUNNERS = {"thm1-drift": drift_suite, "hitting-time": hitting_suite,
                 "thm2-sign": sign_suite, "cor1": gap_suite}


def verify_theorems(cfg: ExperimentConfig, suite: str | None = None) -> dict:
    name = suite or cfg.verify.suite
    if name not in SUITE_RUNNERS:
        raise ValueError(f"unknown verification suite {name!r}; known: {sorted(SUITE_RUNNERS)}")
    result = SUITE_RUNNERS[name](cfg)
    result["suite"] = name
    result["passed"] = all(c["passed"] for c in result["checks"])
    return _finite(result)
