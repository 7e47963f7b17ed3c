"""Linear prediction: autocorrelation method, Levinson-Durbin, residual filter.

Coefficients follow the predictor convention x_hat[n] = sum_i a[i-1] * x[n-i],
so the residual is e[n] = x[n] - sum_i a[i-1] * x[n-i] (an FIR of the input).
"""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

DEFAULT_ORDER = 16

# Gaussian lag window: mild bandwidth expansion so the synthesis filter stays
# minimum-phase on near-singular autocorrelations (40 Hz at 16 kHz).
_LAG_WINDOW_HZ = 40.0
# Relative white-noise floor applied to r[0].
_NOISE_FLOOR = 1e-4


def autocorrelate(frame: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r[0..max_lag] of one analysis window."""
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    r = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        r[k] = np.dot(x[: n - k], x[k:])
    return r


def lag_window(r: np.ndarray, sample_rate: int = 16000) -> np.ndarray:
    """Condition an autocorrelation: noise floor on r[0], Gaussian lag taper."""
    r = np.array(r, dtype=np.float64)
    k = np.arange(len(r))
    w = np.exp(-0.5 * (2.0 * np.pi * _LAG_WINDOW_HZ * k / sample_rate) ** 2)
    r *= w
    r[0] *= 1.0 + _NOISE_FLOOR
    return r


def levinson(r: np.ndarray, order: int) -> np.ndarray:
    """Levinson-Durbin recursion; returns predictor coefficients a[0..order-1].

    Zero-energy input yields all-zero coefficients (identity predictor).
    The recursion stops early if a reflection coefficient reaches magnitude 1
    or the prediction error collapses; remaining coefficients stay valid.
    """
    r = np.asarray(r, dtype=np.float64)
    a = np.zeros(order)
    err = r[0]
    if err <= 0.0:
        return a
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k = acc / err
        if not np.isfinite(k) or abs(k) >= 1.0:
            break
        a[: i + 1] = np.concatenate([a[:i] - k * a[i - 1 :: -1], [k]]) if i else [k]
        err *= 1.0 - k * k
        if err <= 0.0:
            break
    return a


def lpc_analyze(window: np.ndarray, order: int = DEFAULT_ORDER,
                sample_rate: int = 16000) -> np.ndarray:
    """Fit an order-`order` predictor to one analysis window.

    Autocorrelation method with lag windowing, so all reflection coefficients
    stay below 1 in magnitude and the synthesis filter is minimum-phase.
    """
    if order >= len(window):
        raise ValueError(f"order {order} must be < window length {len(window)}")
    r = lag_window(autocorrelate(window, order), sample_rate)
    return levinson(r, order)


def lpc_residual(samples: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Prediction residual e[n] = x[n] - sum_i a_i x[n-i], zero history."""
    fir = np.concatenate([[1.0], -np.asarray(coeffs, dtype=np.float64)])
    return lfilter(fir, [1.0], np.asarray(samples, dtype=np.float64))


def prediction_gain_db(samples: np.ndarray, residual: np.ndarray) -> float:
    """10*log10(input energy / residual energy); 0 dB when either is silent."""
    e_in = float(np.dot(samples, samples))
    e_res = float(np.dot(residual, residual))
    if e_in <= 0.0 or e_res <= 0.0:
        return 0.0
    return 10.0 * np.log10(e_in / e_res)
