import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from simfair.metrics import LinkGains, fairness_indices, link_gains, rate_report, sinr


def test_orthogonal_channel_gives_zero():
    G = np.eye(4)
    W1 = np.zeros((4, 2), complex)
    W1[0, 0] = W1[1, 1] = 1
    H = np.zeros((4, 2), complex)
    H[2, 0] = H[3, 1] = 1
    assert np.array_equal(link_gains(H, G, W1, 1.0).S, np.zeros((2, 2)))


def test_single_user_gain():
    S = link_gains(np.ones((3, 1)), np.eye(3), np.ones((3, 1)), 1.0).S
    assert S.shape == (1, 1) and S[0, 0] == pytest.approx(9)


def test_gains_match_naive():
    rng = np.random.default_rng(0)
    c = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    H, G, W1 = c(4, 2), c(4, 4), c(4, 2)
    S = link_gains(H, G, W1, 1.0).S
    for k in range(2):
        for j in range(2):
            assert S[k, j] == pytest.approx(abs(np.vdot(H[:, k], G @ W1[:, j])) ** 2, rel=1e-12)


def test_shape_and_noise_checks():
    with pytest.raises(ValueError):
        link_gains(np.ones((3, 2)), np.eye(3), np.ones((3, 3)), 1.0)
    with pytest.raises(ValueError):
        link_gains(np.ones((3, 2)), np.eye(3), np.ones((3, 2)), 0.0)


def test_sinr_examples():
    assert sinr(LinkGains(np.array([[4.0]]), 2.0), [3.0])[0] == pytest.approx(6.0)
    assert np.allclose(sinr(LinkGains(np.diag([1.0, 2.0]), 0.5), [1.0, 1.0]), [2.0, 4.0])
    assert np.allclose(sinr(LinkGains(np.array([[2.0, 1.0], [1.0, 2.0]]), 1.0), [1.0, 1.0]), [1, 1])


def test_fairness_examples():
    assert fairness_indices([2.0, 2.0, 2.0]) == pytest.approx((1, 1, 1))
    assert fairness_indices([1.0, 3.0]) == pytest.approx((1 / 3, 0.8, 0.75))
    assert fairness_indices([5.0]) == pytest.approx((1, 1, 1))
    with pytest.raises(ValueError):
        fairness_indices([0.0, 0.0])
    with pytest.raises(ValueError):
        fairness_indices([-1.0, 1.0])


@given(arrays(float, st.integers(1, 12), elements=st.floats(1e-3, 1e3)))
def test_fairness_bounds(r):
    for idx in fairness_indices(r):
        assert -1e-12 <= idx <= 1 + 1e-12


def test_rate_report_consistency():
    gains = LinkGains(np.array([[2.0, 0.5], [0.3, 1.0]]), 0.1)
    rep = rate_report(gains, [1.0, 2.0])
    assert np.allclose(rep.rates, np.log2(1 + rep.sinr))
    assert rep.min_rate == pytest.approx(rep.rates.min())
