import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from belieftrap.btr import (TheoryConstants, compute_bbar, compute_threshold_U, detect_btr_entry,
                            entry_step, estimate_drift, fit_update_error_growth,
                            hitting_time_bound, threshold_from_parts)


def test_bbar_golden():
    assert compute_bbar(1.0, 0.0) == 2.0
    # 2 * (ln 2 * 1 + 2), with ln 2 = 0.6931471805599453
    assert compute_bbar(0.5, 1.0) == pytest.approx(5.386294361119891, abs=1e-12)
    assert compute_bbar(0.5, 0.0) == 4.0
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            compute_bbar(bad, 1.0)


def _consts(**kw):
    base = dict(eta=1.0, L_pi=0.0, m_theta=1.0, c0=0.0, U0=0.0, Psi0=0.0, mu=0.0)
    base.update(kw)
    return TheoryConstants(**base)


def test_threshold_examples():
    # eta = 1 and L_pi = 0 give B-bar = 2
    assert compute_threshold_U(_consts(U0=100.0, Psi0=8.0)) == 100.0
    assert threshold_from_parts(0.0, 1.0, 4.0, 0.0, 0.5) == 10.0
    assert threshold_from_parts(0.0, 0.0, 0.0, 0.0, 2.0) == 0.0
    assert compute_threshold_U(_consts(Psi0=1.0, eta=0.5, m_theta=0.5)) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        compute_threshold_U(_consts(m_theta=0.0))


def test_constants_margin():
    c = _consts(eta=0.5, L_pi=0.0, m_theta=2.0, c0=1.0, mu=10.0)
    assert c.bbar == 4.0
    assert c.delta == pytest.approx(2.0 * 10.0 - (1.0 + 4.0))
    assert c.to_dict()["U"] == pytest.approx(max(0.0, (0.0 + 4.0 + 1.0) / 2.0))


pos = st.floats(0.01, 50)


@given(pos, pos, pos, pos, pos, st.floats(1.01, 3))
def test_threshold_monotone(psi0, bbar, c0, m, U0, factor):
    U = threshold_from_parts(U0, psi0, bbar, c0, m)
    assert threshold_from_parts(U0, psi0, bbar, c0, m * factor) <= U
    assert threshold_from_parts(U0, psi0 * factor, bbar, c0, m) >= U
    assert threshold_from_parts(U0, psi0, bbar * factor, c0, m) >= U
    assert threshold_from_parts(U0, psi0, bbar, c0 * factor, m) >= U


def test_hitting_time_golden():
    assert hitting_time_bound(1.0, 10.0, 1.0, 0.0) == 5            # 1 + ceil(log2 11)
    assert hitting_time_bound(0.5, 10.0, 2.0, 2.0) == 4            # 1 + ceil(log_1.5(7/3) = 2.0897)
    assert hitting_time_bound(0.7, 3.0, 1.0, 3.0) == 1             # argument exactly 1
    with pytest.raises(ValueError):
        hitting_time_bound(1.0, 10.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        hitting_time_bound(1.0, 10.0, -1.0, 0.0)


def test_detect_entry_examples():
    assert detect_btr_entry([5, 4, 3, 2, 1, 0], 3) is None
    assert detect_btr_entry([2.0] * 6, 3) == 3
    # five decreasing steps then flat: diffs 0..4 negative, first all-flat window is [5, 8)
    series = [10, 9, 8, 7, 6, 5, 5, 5, 5, 5]
    assert detect_btr_entry(series, 3, 1e-6) == 8
    assert entry_step(series, 3, 1e-6) == 6
    assert detect_btr_entry([1.0, 1.0], 3) is None


def test_detect_entry_windowed_mean_not_all_steps():
    # one big drop inside an otherwise rising window still averages below zero
    assert detect_btr_entry([0, 1, -5, -4], 3) is None
    assert detect_btr_entry([0, 1, 2, -1], 3) is None   # mean of (1, 1, -3) is -1/3
    assert detect_btr_entry([0, 1, 2, 2.5], 3) == 3


def test_estimate_drift_buckets():
    with pytest.raises(ValueError):
        estimate_drift([], [0, 1])
    out = estimate_drift([[1.5] * 5], [0.0, 1.0, 2.0, 3.0])
    assert out[0] is None and out[2] is None
    assert out[1].mean == 0.0 and out[1].count == 4 and out[1].stderr == 0.0
    out = estimate_drift([[0.5, 1.5, 1.0], [0.2, 0.9]], [0.0, 1.0, 2.0])
    assert out[0].count == 2 and out[0].mean == pytest.approx((1.0 + 0.7) / 2)
    assert out[1].count == 1 and math.isinf(out[1].stderr)


def test_estimate_drift_ci_covers_mean():
    rng = np.random.default_rng(0)
    trajs = [np.cumsum(rng.normal(-0.1, 0.05, 30)) + 10 for _ in range(200)]
    out = [b for b in estimate_drift(trajs, np.linspace(0, 12, 7)) if b is not None]
    assert all(b.ci_low < -0.1 + 0.02 and b.ci_high > -0.1 - 0.02 for b in out if b.count > 200)


def test_growth_fit():
    psi = np.array([1.0, 2.0, 3.0, 4.0])
    m, c0 = fit_update_error_growth(psi, 0.5 * psi - 0.2)
    assert m == pytest.approx(0.5) and c0 == pytest.approx(0.2)
    m, c0 = fit_update_error_growth(psi, np.array([0.0, 1.0, 1.0, 2.0]))
    assert np.all(np.array([0.0, 1.0, 1.0, 2.0]) >= m * psi - c0 - 1e-12)
    with pytest.raises(ValueError):
        fit_update_error_growth([1.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        fit_update_error_growth(psi, psi, U0=10.0)
