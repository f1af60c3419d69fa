import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belieftrap.belief import StateSpace, bayes_update, uniform
from belieftrap.envs import cd_evaluator, cd_states, gn_enumerate_states, gn_feedback
from belieftrap.hypotheses import (EmptyHypothesisSetError, HypothesisSet, belief_from_hypotheses,
                                   filter_consistent, init_full, progress)


def test_init_full_sizes():
    assert len(init_full(gn_enumerate_states(3, 5))) == 60
    assert len(init_full(gn_enumerate_states(4, 5))) == 120
    assert len(init_full(cd_states(10, 2))) == 100


def test_filter_unchanged_when_everything_agrees():
    space = StateSpace((1, 2, 3))
    h = filter_consistent(init_full(space), None, 0, lambda s, a: 0, space)
    assert h.members == frozenset({0, 1, 2})
    assert h.generation == 1


def test_filter_gn_exact_hit():
    space = gn_enumerate_states(3, 5)
    h = filter_consistent(init_full(space), (1, 2, 3), (3, 0), gn_feedback, space)
    assert [space.states[i] for i in h.members] == [(1, 2, 3)]


def test_filter_cd_truth_tables():
    space = cd_states(3, 1)                      # one label over {AND, OR, XOR}
    evaluate = cd_evaluator(("AND", "OR", "XOR"), ("A",))
    h = filter_consistent(init_full(space), ("A", (1, 0)), 1, evaluate, space)
    assert sorted(space.states[i] for i in h.members) == [(1,), (2,)]


def test_filter_empty_input_rejected():
    space = StateSpace((1,))
    with pytest.raises(EmptyHypothesisSetError):
        filter_consistent(HypothesisSet(frozenset()), None, 0, lambda s, a: 0, space)


def test_progress_examples():
    space = gn_enumerate_states(3, 5)
    full = init_full(space)
    assert progress(full, full) == 0
    h = filter_consistent(full, (1, 2, 3), (1, 0), gn_feedback, space)
    assert progress(full, h) == 60 - len(h)
    a = HypothesisSet(frozenset(range(100)))
    b = HypothesisSet(frozenset(range(99)))
    c = HypothesisSet(frozenset({0}))
    assert (progress(a, b), progress(b, c)) == (1, 98)
    with pytest.raises(ValueError):
        progress(c, b)


def test_progress_on_concrete_gn_filter():
    space = gn_enumerate_states(3, 5)
    full = init_full(space)
    h = filter_consistent(full, (1, 2, 3), (0, 3), gn_feedback, space)
    # (0, 3): the three symbols 1,2,3 in a derangement of (1,2,3): 2 states
    assert len(h) == 2
    assert progress(full, h) == 58


def test_belief_from_hypotheses_examples():
    space = StateSpace(tuple(range(4)))
    np.testing.assert_array_equal(belief_from_hypotheses(HypothesisSet(frozenset({2})), space),
                                  [0, 0, 1, 0])
    np.testing.assert_array_equal(belief_from_hypotheses(init_full(space), space), [0.25] * 4)
    np.testing.assert_array_equal(
        belief_from_hypotheses(HypothesisSet(frozenset({0, 1})), StateSpace((0, 1, 2))), [0.5, 0.5, 0])
    with pytest.raises(EmptyHypothesisSetError):
        belief_from_hypotheses(HypothesisSet(frozenset()), space)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_filter_matches_exact_bayes(seed, steps):
    from belieftrap.envs import gn_task
    from belieftrap.envs.guess_numbers import gn_sample_instance
    rng = np.random.default_rng(seed)
    task = gn_task(gn_sample_instance(3, 4, rng))
    space, model = task.space, task.model
    b, h = uniform(space.size), init_full(space)
    for _ in range(steps):
        a = int(rng.integers(model.n_actions))
        obs = task.observe(model.actions[a])
        b = bayes_update(b, a, model.obs_index(obs), model)
        h_next = filter_consistent(h, model.actions[a], obs, task.evaluate, space)
        assert len(h_next) <= len(h)
        assert progress(h, h_next) >= 0
        h = h_next
        assert np.max(np.abs(b - belief_from_hypotheses(h, space))) <= 1e-12
