"""CircuitDecoding: identify hidden boolean circuits from a candidate pool.

Candidates are prefix expressions over AND, OR, XOR, NOT and input
variables ``x0, x1, ...``, e.g. ``"OR(AND(x0,x1),x2)"``. A bare operator
name (``"AND"``) applies the operator to every input; a bare ``"NOT"`` negates
``x0``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache, reduce
from operator import and_, or_, xor

import numpy as np

from ..belief import StateSpace

_OPS = {"AND": and_, "OR": or_, "XOR": xor}
_TOKEN = re.compile(r"\s*(AND|OR|XOR|NOT|x\d+|\(|\)|,)\s*")


class CircuitSyntaxError(ValueError):
    pass


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise CircuitSyntaxError(f"unexpected input at {pos}: {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


@lru_cache(maxsize=4096)
def parse_circuit(text: str):
    """Parse to a tree of ``("var", i)`` / ``(op, children)`` tuples."""
    tokens = _tokenize(text)
    if not tokens:
        raise CircuitSyntaxError("empty circuit")

    def expr(i):
        if i >= len(tokens):
            raise CircuitSyntaxError("unexpected end of circuit")
        tok = tokens[i]
        if tok.startswith("x"):
            return ("var", int(tok[1:])), i + 1
        if tok not in _OPS and tok != "NOT":
            raise CircuitSyntaxError(f"unexpected token {tok!r}")
        if i + 1 == len(tokens) or tokens[i + 1] != "(":
            return ("bare", tok), i + 1
        children, j = [], i + 2
        while True:
            child, j = expr(j)
            children.append(child)
            if j >= len(tokens):
                raise CircuitSyntaxError("unterminated argument list")
            if tokens[j] == ")":
                j += 1
                break
            if tokens[j] != ",":
                raise CircuitSyntaxError(f"expected ',' got {tokens[j]!r}")
            j += 1
        if tok == "NOT" and len(children) != 1:
            raise CircuitSyntaxError("NOT takes exactly one argument")
        if tok != "NOT" and len(children) < 2:
            raise CircuitSyntaxError(f"{tok} takes at least two arguments")
        return (tok, tuple(children)), j

    tree, end = expr(0)
    if end != len(tokens):
        raise CircuitSyntaxError(f"trailing tokens: {tokens[end:]}")
    return tree


def _arity(tree) -> int:
    """Minimum number of inputs the expression reads (0 for bare ops)."""
    kind = tree[0]
    if kind == "var":
        return tree[1] + 1
    if kind == "bare":
        return 1 if tree[1] == "NOT" else 0
    return max(_arity(c) for c in tree[1])


def _eval(tree, bits) -> int:
    kind = tree[0]
    if kind == "var":
        return bits[tree[1]]
    if kind == "bare":
        return 1 - bits[0] if tree[1] == "NOT" else reduce(_OPS[tree[1]], bits)
    vals = [_eval(c, bits) for c in tree[1]]
    if kind == "NOT":
        return 1 - vals[0]
    return reduce(_OPS[kind], vals)


def cd_eval(candidate, input_bits) -> int:
    """Evaluate a candidate (expression string or parsed tree) on 0/1 inputs."""
    tree = parse_circuit(candidate) if isinstance(candidate, str) else candidate
    bits = tuple(int(v) for v in input_bits)
    if any(v not in (0, 1) for v in bits):
        raise ValueError(f"inputs must be binary: {input_bits}")
    need = _arity(tree)
    if len(bits) < max(need, 1) or (tree[0] == "bare" and tree[1] != "NOT" and len(bits) < 2):
        raise ValueError(f"arity mismatch: circuit needs {max(need, 1)} inputs, got {len(bits)}")
    return int(_eval(tree, bits))


def all_inputs(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=n))


def truth_table(candidate, n: int) -> np.ndarray:
    return np.array([cd_eval(candidate, x) for x in all_inputs(n)], dtype=np.int8)


@dataclass(frozen=True)
class CircuitInstance:
    candidates: tuple
    hidden_assignment: dict
    num_inputs: int

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "hidden_assignment", dict(sorted(self.hidden_assignment.items())))
        if not self.candidates:
            raise ValueError("candidate pool must be non-empty")
        if not self.hidden_assignment:
            raise ValueError("at least one hidden circuit is required")
        for label, idx in self.hidden_assignment.items():
            if not 0 <= idx < len(self.candidates):
                raise ValueError(f"label {label!r} -> candidate {idx} out of range")
        for c in self.candidates:
            if _arity(parse_circuit(c)) > self.num_inputs:
                raise ValueError(f"candidate {c!r} reads more than {self.num_inputs} inputs")

    @property
    def labels(self) -> tuple:
        return tuple(self.hidden_assignment)

    @property
    def hidden_state(self) -> tuple:
        return tuple(self.hidden_assignment[label] for label in self.labels)

    def to_dict(self) -> dict:
        return {
            "kind": "cd",
            "candidates": list(self.candidates),
            "hidden_assignment": dict(self.hidden_assignment),
            "num_inputs": self.num_inputs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitInstance":
        return cls(tuple(d["candidates"]), dict(d["hidden_assignment"]), int(d["num_inputs"]))


def cd_observe(instance: CircuitInstance, label, input_bits) -> int:
    if label not in instance.hidden_assignment:
        raise KeyError(f"unknown circuit label {label!r}")
    if len(input_bits) != instance.num_inputs:
        raise ValueError(f"arity mismatch: expected {instance.num_inputs} inputs")
    return cd_eval(instance.candidates[instance.hidden_assignment[label]], input_bits)


def cd_states(num_candidates: int, num_labels: int, distinct: bool = False) -> StateSpace:
    """Latent states: one candidate index per label."""
    if distinct:
        return StateSpace(tuple(itertools.permutations(range(num_candidates), num_labels)))
    return StateSpace(tuple(itertools.product(range(num_candidates), repeat=num_labels)))


def cd_actions(labels, num_inputs: int) -> list[tuple]:
    return [(label, x) for label in labels for x in all_inputs(num_inputs)]


def cd_evaluator(candidates, labels):
    """Scalar evaluator (state, action) -> output bit, used for hypothesis filtering."""
    pos = {label: i for i, label in enumerate(labels)}
    trees = [parse_circuit(c) for c in candidates]

    def evaluate(state, action):
        label, bits = action
        return cd_eval(trees[state[pos[label]]], bits)

    return evaluate


def _random_tree(rng: np.random.Generator, n: int, depth: int) -> str:
    if depth == 0 or rng.random() < 0.3:
        return f"x{rng.integers(n)}"
    op = ("AND", "OR", "XOR", "NOT")[rng.integers(4)]
    if op == "NOT":
        return f"NOT({_random_tree(rng, n, depth - 1)})"
    return f"{op}({_random_tree(rng, n, depth - 1)},{_random_tree(rng, n, depth - 1)})"


def random_candidate_pool(num_candidates: int, num_inputs: int,
                          rng: np.random.Generator, max_depth: int = 3) -> tuple[str, ...]:
    """Candidates with pairwise-distinct truth tables, so every hidden circuit is identifiable."""
    if num_candidates > 2 ** (2 ** num_inputs):
        raise ValueError("more candidates than distinct boolean functions")
    pool, seen = [], set()
    for _ in range(100_000):
        c = _random_tree(rng, num_inputs, max_depth)
        key = truth_table(c, num_inputs).tobytes()
        if key not in seen:
            seen.add(key)
            pool.append(c)
            if len(pool) == num_candidates:
                return tuple(pool)
    raise RuntimeError("could not draw enough distinct candidates")
