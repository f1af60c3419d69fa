import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belieftrap.agents import (CorruptionSpec, PolicySpec, corrupted_update,
                               estimate_lipschitz_Lpi, make_policy, make_updater, mix_rate,
                               mix_update_error, policy_distribution, sample_belief_pairs)
from belieftrap.belief import (ObservationModel, StateSpace, bayes_update, potential, uniform,
                               update_error)
from belieftrap.envs import gn_task
from belieftrap.envs.guess_numbers import gn_sample_instance

from conftest import random_model


def _two_symmetric_actions():
    # both actions split 4 states into halves
    table = np.array([[0, 0, 1, 1], [0, 1, 0, 1]], dtype=np.int32)
    return StateSpace(tuple(range(4))), ObservationModel(table, (0, 1), 0.0)


def test_softmax_symmetry():
    space, model = _two_symmetric_actions()
    p = policy_distribution(PolicySpec(temperature=0.3), uniform(4), None, space, model)
    np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-15)


def test_tiny_temperature_is_argmax():
    space = StateSpace(tuple(range(4)))
    model = ObservationModel(np.array([[0, 0, 0, 0], [0, 0, 1, 1]], dtype=np.int32), (0, 1))
    p = policy_distribution(PolicySpec(temperature=1e-9), uniform(4), None, space, model)
    np.testing.assert_array_equal(p, [0.0, 1.0])


def test_softmax_respects_legal_actions():
    space, model = _two_symmetric_actions()
    p = policy_distribution(PolicySpec(), uniform(4), [1], space, model)
    np.testing.assert_array_equal(p, [0.0, 1.0])


def test_uniform_consistent_over_hypothesis_set():
    task = gn_task(gn_sample_instance(3, 5, np.random.default_rng(0)))
    b = np.zeros(task.space.size)
    b[:12] = 1 / 12
    p = policy_distribution(PolicySpec("uniform_consistent"), b, None, task.space, task.model,
                            action_states=task.action_states)
    assert np.count_nonzero(p) == 12
    np.testing.assert_allclose(p[:12], 1 / 12)


def test_fixed_sequence_and_lipschitz_zero():
    space, model = _two_symmetric_actions()
    spec = PolicySpec("fixed_sequence", sequence=(1, 0))
    assert policy_distribution(spec, uniform(4), None, space, model, turn=0)[1] == 1.0
    assert policy_distribution(spec, uniform(4), None, space, model, turn=1)[0] == 1.0
    pairs = sample_belief_pairs(4, 120, np.random.default_rng(0))
    value, _ = estimate_lipschitz_Lpi(make_policy(spec, space, model), pairs)
    assert value == 0.0


def test_lipschitz_skips_identical_pairs_and_reports_argmax():
    space, model = _two_symmetric_actions()
    policy = make_policy(PolicySpec(temperature=5.0), space, model)
    b = uniform(4)
    value, pair = estimate_lipschitz_Lpi(policy, [(b, b)])
    assert value == 0.0 and pair is None
    pairs = sample_belief_pairs(4, 200, np.random.default_rng(1))
    value, pair = estimate_lipschitz_Lpi(policy, pairs)
    assert value > 0 and pair is not None


def test_spec_validation():
    with pytest.raises(ValueError):
        PolicySpec(temperature=0)
    with pytest.raises(ValueError):
        PolicySpec("fixed_sequence")
    with pytest.raises(ValueError):
        CorruptionSpec("uniform_mix", eps0=0.5, eps_cap=0.2)
    with pytest.raises(ValueError):
        CorruptionSpec("psi_coupled_mix", slope=-1)


def test_corrupted_update_examples():
    space = StateSpace((0, 1))
    model = ObservationModel(np.array([[0, 1]], dtype=np.int32), (0, 1))
    b = uniform(2)
    np.testing.assert_array_equal(corrupted_update(CorruptionSpec(), b, 0, 0, space, model),
                                  bayes_update(b, 0, 0, model))
    np.testing.assert_allclose(corrupted_update(CorruptionSpec("uniform_mix", 1.0), b, 0, 0,
                                                space, model), [0.5, 0.5])
    np.testing.assert_allclose(corrupted_update(CorruptionSpec("uniform_mix", 0.5), b, 0, 0,
                                                space, model), [0.75, 0.25], atol=1e-15)


def test_psi_coupled_rate():
    space = StateSpace((0, 1))
    spec = CorruptionSpec("psi_coupled_mix", eps0=0.1, slope=0.3, eps_cap=0.9)
    assert mix_rate(spec, np.array([1.0, 0.0]), space) == pytest.approx(0.1)
    assert mix_rate(spec, np.array([0.5, 0.5]), space) == pytest.approx(0.1 + 0.3 * np.log(2))
    assert mix_rate(spec, np.array([1e-9, 1 - 1e-9]), space) == 0.9


@given(st.integers(0, 2**32 - 1),
       st.sampled_from(["none", "uniform_mix", "psi_coupled_mix"]),
       st.floats(0, 1), st.floats(0, 3), st.sampled_from([0.0, 0.1]))
def test_corrupted_update_is_a_belief(seed, kind, eps0, slope, eta):
    rng = np.random.default_rng(seed)
    model = random_model(rng, n_states=5, eta=eta)
    space = StateSpace(tuple(range(5)), int(rng.integers(5)))
    spec = CorruptionSpec(kind, eps0, slope)
    b = rng.dirichlet(np.ones(5))
    for a in range(model.n_actions):
        for o in range(model.n_obs):
            if model.predictive(b)[a, o] > 0:
                post = corrupted_update(spec, b, a, o, space, model)
                assert np.all(post >= 0) and abs(post.sum() - 1) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.05]),
       st.sampled_from(["none", "uniform_mix", "psi_coupled_mix"]))
def test_vectorised_update_error_matches_enumeration(seed, eta, kind):
    rng = np.random.default_rng(seed)
    model = random_model(rng, n_states=6, n_actions=4, n_obs=3, eta=eta)
    space = StateSpace(tuple(range(6)), int(rng.integers(6)))
    spec = CorruptionSpec(kind, 0.2, 0.5)
    b = rng.dirichlet(np.ones(6))
    policy = make_policy(PolicySpec(temperature=0.5), space, model)
    want = update_error(b, policy, make_updater(spec, space, model), space, model)
    assert mix_update_error(spec, b, policy(b), space, model) == pytest.approx(want, abs=1e-10)
    if kind == "none":
        assert want == 0.0


def _gn35_grid(spec, psis):
    task = gn_task(gn_sample_instance(3, 5, np.random.default_rng(0)))
    space, model = task.space, task.model
    policy = make_policy(PolicySpec(), space, model, action_states=task.action_states)
    s, n = space.true_index, space.size
    out = []
    for psi in psis:
        p = np.exp(-psi)
        b = np.full(n, (1 - p) / (n - 1))   # same support shape at every grid point
        b[s] = p
        assert potential(b, space) == pytest.approx(psi)
        out.append(mix_update_error(spec, b, policy(b), space, model))
    return np.array(out)


def test_psi_coupled_error_grows_until_the_cap_binds():
    spec = CorruptionSpec("psi_coupled_mix", eps0=0.1, slope=0.3)
    cap_psi = (spec.eps_cap - spec.eps0) / spec.slope     # 3 nats
    c = _gn35_grid(spec, np.linspace(0.0, cap_psi, 16))
    assert np.all(np.diff(c) >= 0)


def test_psi_coupled_error_falls_once_updates_are_fully_reset():
    # with the mixing rate capped at 1 the agent belief is uniform whatever Psi(b) is,
    # so c = log|S| - E[Psi(B*)] shrinks as the exact posterior drifts from the truth
    spec = CorruptionSpec("psi_coupled_mix", eps0=0.1, slope=0.3)
    c = _gn35_grid(spec, np.linspace(3.2, 4.5, 6))
    assert np.all(np.diff(c) < 0)
