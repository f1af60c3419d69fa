import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belieftrap.advantage import (SyntheticDrift, ValueCalibration, advantage_report,
                                  calibrated_values, check_sparse, drift_advantages, gae, gae_all,
                                  generate_drift, geometric_sums, inversion_threshold,
                                  td_errors, truncated_gae)


def test_td_error_examples():
    np.testing.assert_array_equal(td_errors([0, 0, 0], [0, 0, 0, 0]), [0, 0, 0])
    np.testing.assert_array_equal(td_errors([0, 0, 1], [0, 0, 0, 0], 1.0), [0, 0, 1])
    np.testing.assert_array_equal(td_errors([0], [0.5, 0], 1.0), [-0.5])
    with pytest.raises(ValueError):
        td_errors([0, 0], [0, 0])


def test_gae_examples():
    assert gae([0, 0, 1], 1, 1, 0) == 1.0
    assert all(gae([0, 0, 0], 0.9, 0.9, t) == 0 for t in range(3))
    assert gae([1, 1], 1.0, 0.5, 0) == 1.5
    with pytest.raises(IndexError):
        gae([1, 1], 1, 1, 2)


def test_truncated_gae_examples():
    d = [1, -1, -1, -1]
    assert truncated_gae(d, 1, 1, 0, 1) == 1.0
    assert gae(d, 1, 1, 0) == -2.0
    assert truncated_gae(d, 0.9, 0.8, 1, 4) == pytest.approx(gae(d, 0.9, 0.8, 1))
    assert truncated_gae([0.3, 0.2, 0, 0], 1, 1, 0, 2) == gae([0.3, 0.2, 0, 0], 1, 1, 0)
    with pytest.raises(ValueError):
        truncated_gae(d, 1, 1, 2, 2)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=15), st.floats(0, 1), st.floats(0, 1),
       st.data())
def test_gae_decomposes_at_truncation(deltas, gamma, lam, data):
    T = len(deltas)
    t = data.draw(st.integers(0, T - 2))
    t_S = data.draw(st.integers(t + 1, T - 1))
    tail = gae(deltas, gamma, lam, t_S)
    rebuilt = truncated_gae(deltas, gamma, lam, t, t_S) + (gamma * lam) ** (t_S - t) * tail
    assert gae(deltas, gamma, lam, t) == pytest.approx(rebuilt, abs=1e-9)
    np.testing.assert_allclose(gae_all(deltas, gamma, lam)[t], gae(deltas, gamma, lam, t), atol=1e-9)


def test_geometric_sum_examples():
    assert geometric_sums(0, 2, 13, 1, 1) == (2.0, 10.0)
    s_pre, s_tail = geometric_sums(0, 1, 3, 0.5, 1.0)
    assert (s_pre, s_tail) == (pytest.approx(1.0), pytest.approx(0.5))
    assert geometric_sums(0, 4, 5, 0.9, 0.9)[1] == 0.0
    with pytest.raises(ValueError):
        geometric_sums(2, 2, 5)


@given(st.integers(0, 5), st.integers(1, 6), st.integers(1, 8), st.floats(0.05, 1))
def test_geometric_sums_match_direct(t, gap, tail, rate):
    t_S, T = t + gap, t + gap + tail
    s_pre, s_tail = geometric_sums(t, t_S, T, rate, 1.0)
    assert s_pre == pytest.approx(sum(rate ** j for j in range(t_S - t)), rel=1e-12)
    assert s_tail == pytest.approx(sum(rate ** j for j in range(t_S - t, T - t - 1)), rel=1e-12)


def test_inversion_threshold_examples():
    assert inversion_threshold(0, 2, 13, 1, 1) == pytest.approx(0.2, abs=1e-12)   # 2 / 10
    assert inversion_threshold(0, 3, 7, 1, 1) == 1.0                              # 3 / 3
    assert inversion_threshold(0, 1, 3, 0.5, 1.0) == pytest.approx(2.0, abs=1e-12)  # 1 / 0.5
    with pytest.raises(ValueError):
        inversion_threshold(0, 4, 5)


def test_calibration():
    np.testing.assert_array_equal(calibrated_values([0, 0.5, 1]), [0, 0.5, 1])
    half = ValueCalibration("affine", 0.5, 0.0)
    assert calibrated_values([1.0], half)[0] == 0.5 and half.kappa_V == 0.5
    with pytest.raises(ValueError):
        calibrated_values([1.2])
    with pytest.raises(ValueError):
        ValueCalibration("affine", -1.0)


@given(st.floats(0.1, 20), st.floats(-1, 2))
def test_logistic_kappa_is_min_derivative(scale, offset):
    cal = ValueCalibration("logistic", scale, offset)
    x = np.linspace(0, 1, 2001)
    g = cal(x)
    assert np.all(np.diff(g) >= 0)
    # analytic derivative versus a central finite difference
    h = 1e-6
    fd = (cal(x[1:-1] + h) - cal(x[1:-1] - h)) / (2 * h)
    np.testing.assert_allclose(cal.derivative(x[1:-1]), fd, rtol=1e-5, atol=1e-9)
    assert cal.kappa_V == pytest.approx(cal.derivative(x).min(), rel=1e-12)
    assert cal.kappa_V > 0


def test_sparse_rewards_enforced():
    check_sparse([0, 0, 1])
    with pytest.raises(ValueError):
        check_sparse([0, 1, 0])
    with pytest.raises(ValueError):
        advantage_report([1, 0, 1], [0.1, 0.2, 0.3], None)


def test_advantage_report_consistency():
    rep = advantage_report([0, 0, 0, 1], [0.2, 0.5, 0.4, 0.3], 2)
    np.testing.assert_allclose(rep.deltas, [0.3, -0.1, -0.1, 0.7])
    np.testing.assert_allclose(rep.A_hat, [0.8, 0.5, 0.6, 0.7])
    np.testing.assert_allclose(rep.A_hat_pre[:2], [0.2, -0.1])
    assert np.isnan(rep.A_hat_pre[2:]).all()
    assert (rep.S_pre[0], rep.S_tail[0]) == (2.0, 1.0)
    assert rep.rho_b == pytest.approx(0.1)
    assert rep.bound_rhs[0] == pytest.approx(2.0 - 0.1 * 1.0)


def test_drift_generator_shape_and_schedule():
    cfg = SyntheticDrift(rho_b=0.05)
    batch = generate_drift(cfg, 50, np.random.default_rng(0))
    assert batch.beliefs.shape == (50, cfg.horizon) == (50, 13)
    np.testing.assert_allclose(batch.beliefs[0], [0, 0.5, 1.0] + [1 - 0.05 * k for k in range(1, 11)])
    assert batch.clip_count == 0
    assert np.all(batch.rewards[:, :-1] == 0)


def test_drift_generator_counts_clipping():
    batch = generate_drift(SyntheticDrift(rho_b=0.3), 20, np.random.default_rng(0))
    assert batch.clip_count == 20
    full, pre = drift_advantages(batch)
    assert full.size == 0 and pre.size == 0


def test_drift_gap_matches_tail_drop():
    cfg = SyntheticDrift(rho_b=0.08, b_peak=0.9, noise=0.01)
    batch = generate_drift(cfg, 4000, np.random.default_rng(5))
    full, pre = drift_advantages(batch)
    gap = pre - full
    # telescoping: gap = V_{t_S} - R, and E[R] = V_{T-1} = V_{t_S} - 10 * rho
    assert abs(gap.mean() - 0.8) < 4 * gap.std() / math.sqrt(gap.size)
