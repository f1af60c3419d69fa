"""Deterministic mechanics of the enumerable tasks and their instance files."""
from __future__ import annotations

import json
from pathlib import Path

from .circuits import (CircuitInstance, cd_actions, cd_eval, cd_evaluator, cd_observe,
                       cd_states, parse_circuit, random_candidate_pool, truth_table)
from .guess_numbers import (GN_PRESETS, GuessNumbersInstance, gn_count, gn_enumerate_states,
                            gn_feedback, gn_sample_instance)
from .preference import (PreferenceInstance, binary_similarity, cosine, mr_recommend,
                         pe_compare, pe_grid_states, pe_score)
from .tasks import Task, cd_task, gn_task, make_task, pe_task

_KINDS = {"gn": GuessNumbersInstance, "cd": CircuitInstance, "pe": PreferenceInstance}


def instance_from_dict(d: dict):
    try:
        cls = _KINDS[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown instance kind {d.get('kind')!r}") from None
    return cls.from_dict(d)


def dumps_instance(instance) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(instance.to_dict(), sort_keys=True, indent=2) + "\n"


def loads_instance(text: str):
    return instance_from_dict(json.loads(text))


def load_instance(path) -> object:
    return loads_instance(Path(path).read_text())


def save_instance(instance, path) -> None:
    Path(path).write_text(dumps_instance(instance))


__all__ = [
    "CircuitInstance", "GuessNumbersInstance", "PreferenceInstance", "Task", "GN_PRESETS",
    "binary_similarity", "cd_actions", "cd_eval", "cd_evaluator", "cd_observe", "cd_states",
    "cd_task", "cosine", "dumps_instance", "gn_count", "gn_enumerate_states", "gn_feedback",
    "gn_sample_instance", "gn_task", "instance_from_dict", "load_instance", "loads_instance",
    "make_task", "mr_recommend", "parse_circuit", "pe_compare", "pe_grid_states", "pe_score",
    "pe_task", "random_candidate_pool", "save_instance", "truth_table",
]
