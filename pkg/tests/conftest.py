import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from belieftrap.belief import ObservationModel, StateSpace

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_model(rng, n_states=5, n_actions=4, n_obs=3, eta=0.0):
    table = rng.integers(n_obs, size=(n_actions, n_states)).astype(np.int32)
    return ObservationModel(table, tuple(range(n_obs)), eta)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def partition4():
    """Four states; action 0 isolates state 0, action 1 reveals everything, action 2 is blind."""
    space = StateSpace(("s0", "s1", "s2", "s3"), 0)
    table = np.array([[0, 1, 1, 1], [0, 1, 2, 3], [0, 0, 0, 0]], dtype=np.int32)
    return space, ObservationModel(table, (0, 1, 2, 3), 0.0, ("isolate", "reveal", "blind"))
