import numpy as np
import pytest
from scipy.signal import lfilter

from pitchkit import lpc


def ar2_process(rng, n, a1=1.6, a2=-0.64):
    e = rng.standard_normal(n)
    return lfilter([1.0], [1.0, -a1, -a2], e), e


def least_squares_ar_fit(x, order):
    """Direct least-squares predictor fit (the independent oracle)."""
    rows = np.stack([x[order - i - 1 : len(x) - i - 1] for i in range(order)], axis=1)
    target = x[order:]
    coef, *_ = np.linalg.lstsq(rows, target, rcond=None)
    return coef


def test_zero_signal_gives_zero_coeffs():
    a = lpc.lpc_analyze(np.zeros(320), 16)
    assert np.all(a == 0.0)


def test_ar2_recovery_matches_least_squares_oracle(rng):
    x, _ = ar2_process(rng, 16000)
    a = lpc.lpc_analyze(x, 2)
    oracle = least_squares_ar_fit(x, 2)
    assert a == pytest.approx([1.6, -0.64], abs=0.05)
    assert a == pytest.approx(oracle, abs=0.05)


def test_white_noise_prediction_gain_small(rng):
    gains = []
    for _ in range(100):
        x = rng.standard_normal(320)
        a = lpc.lpc_analyze(x, 16)
        e = lpc.lpc_residual(x, a)
        gains.append(lpc.prediction_gain_db(x, e))
    assert np.mean(gains) < 3.0


def test_residual_identity_when_coeffs_zero(rng):
    x = rng.standard_normal(500)
    assert np.array_equal(lpc.lpc_residual(x, np.zeros(16)), x)


def test_residual_impulse_order1():
    x = np.zeros(6)
    x[0] = 1.0
    e = lpc.lpc_residual(x, np.array([0.5]))
    assert e == pytest.approx([1.0, -0.5, 0.0, 0.0, 0.0, 0.0])


def test_residual_recovers_known_excitation(rng):
    x, excitation = ar2_process(rng, 8000)
    e = lpc.lpc_residual(x, np.array([1.6, -0.64]))
    # residual energy ~ excitation energy (same zero-history filtering)
    ratio = np.dot(e, e) / np.dot(excitation, excitation)
    assert abs(ratio - 1.0) < 0.10


def test_reflection_coefficients_stay_stable(rng):
    # near-singular input: a pure tone has an almost rank-2 autocorrelation
    t = np.arange(320)
    x = np.cos(2 * np.pi * 0.03 * t)
    a = lpc.lpc_analyze(x, 16)
    # minimum phase <=> all roots of 1 - sum a_i z^-i inside the unit circle
    roots = np.roots(np.concatenate([[1.0], -a]))
    assert np.all(np.abs(roots) < 1.0)


def test_order_must_fit_window():
    with pytest.raises(ValueError):
        lpc.lpc_analyze(np.zeros(16), 16)
