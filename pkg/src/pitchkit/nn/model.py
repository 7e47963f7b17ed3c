"""Streaming inference for the three estimators and pitch decoding.

A ModelRunner holds one stream's state (conv time history, GRU hidden); the
distribution for frame m therefore depends only on feature frames <= m.
Weights are immutable and may be shared across runners.
"""
from __future__ import annotations

import numpy as np

from . import layers
from .arch import CENTS_PER_CLASS, PITCH_ANCHOR_HZ
from .weights import ModelWeights


class NumericError(RuntimeError):
    """A non-finite value appeared in an intermediate activation."""


def class_to_hz(index) -> np.ndarray | float:
    """Center frequency of a 20-cent pitch class anchored at 62.5 Hz."""
    return PITCH_ANCHOR_HZ * 2.0 ** (np.asarray(index) * CENTS_PER_CLASS / 1200.0)


def pitch_decode(dist: np.ndarray) -> tuple[float, float]:
    """(f0_hz, confidence) from a class distribution; ties pick the lower class."""
    dist = np.asarray(dist)
    idx = int(np.argmax(dist))
    return float(class_to_hz(idx)), float(dist[idx])


def _check_finite(name: str, x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite activation in layer {name!r}")
    return x


class _ConvState:
    """Two-frame input history for one causal conv layer of one stream."""

    def __init__(self, lags: int, in_ch: int, dtype):
        self.hist = np.zeros((2, lags, in_ch), dtype=dtype)

    def step(self, cur: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
        lags = cur.shape[0]
        xw = np.concatenate([self.hist, cur[None]])          # (3, lags, in_ch)
        xp = np.pad(xw, ((0, 0), (1, 1), (0, 0)))
        y = np.broadcast_to(bias, (lags, kernel.shape[3])).copy()
        for dt in range(3):
            for dl in range(3):
                y += xp[dt, dl : dl + lags] @ kernel[dt, dl]
        self.hist = xw[1:]
        return np.tanh(y)


class ModelRunner:
    """Per-stream forward pass; feed frames in order, one stream per runner."""

    def __init__(self, weights: ModelWeights):
        weights.validate()
        self.weights = weights
        self.spec = weights.spec
        self._dtype = next(iter(weights.tensors.values())).dtype
        self.reset()

    def reset(self) -> None:
        """Clear all stream state (call between independent streams)."""
        spec = self.spec
        self.hidden = np.zeros(spec.hidden, dtype=self._dtype)
        self._conv_states = []
        if spec.has_xcorr:
            chans = (1,) + spec.conv_channels
            self._conv_states = [
                _ConvState(spec.lag_dim, chans[i], self._dtype) for i in range(3)
            ]

    def step(self, xcorr: np.ndarray | None = None,
             spectral: np.ndarray | None = None) -> np.ndarray:
        """Consume one feature frame, return the 192-class distribution."""
        t = self.weights.tensors
        spec = self.spec
        parts = []
        if spec.has_spectral:
            if spectral is None:
                raise ValueError(f"arch {spec.kind!r} needs spectral features")
            x = np.asarray(spectral, dtype=self._dtype)
            x = _check_finite("if_fc1", layers.fc_forward(x, t["if_fc1.w"], t["if_fc1.b"]))
            x = _check_finite("if_fc2", layers.fc_forward(x, t["if_fc2.w"], t["if_fc2.b"]))
            parts.append(x)
        if spec.has_xcorr:
            if xcorr is None:
                raise ValueError(f"arch {spec.kind!r} needs cross-correlation features")
            c = np.asarray(xcorr, dtype=self._dtype)[:, None]   # (lags, 1 channel)
            for i, st in enumerate(self._conv_states):
                c = _check_finite(f"conv{i + 1}",
                                  st.step(c, t[f"conv{i + 1}.k"], t[f"conv{i + 1}.b"]))
            parts.append(c[:, 0])
        x = parts[0] if len(parts) == 1 else np.concatenate(parts)
        if "bottleneck.w" in t:
            x = _check_finite("bottleneck",
                              layers.fc_forward(x, t["bottleneck.w"], t["bottleneck.b"]))
        self.hidden = _check_finite("gru", layers.gru_step(
            self.hidden, x, t["gru.wx"], t["gru.wh"], t["gru.bx"], t["gru.bh"]))
        logits = _check_finite("out",
                               layers.fc_forward(self.hidden, t["out.w"], t["out.b"], "none"))
        return layers.softmax(logits)

    def run(self, xcorr: np.ndarray | None = None,
            spectral: np.ndarray | None = None) -> np.ndarray:
        """Process a whole feature matrix; returns (frames, classes)."""
        n = len(spectral) if spectral is not None else len(xcorr)
        out = np.empty((n, self.spec.classes), dtype=self._dtype)
        for m in range(n):
            out[m] = self.step(
                xcorr=None if xcorr is None else xcorr[m],
                spectral=None if spectral is None else spectral[m],
            )
        return out
