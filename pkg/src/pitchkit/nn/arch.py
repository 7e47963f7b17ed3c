"""The three estimator architectures: layer tables, parameter and FLOP counts.

All three share a size-64 GRU and a 192-way softmax head over 20-cent pitch
classes anchored at 62.5 Hz:

* ``xcorr``: three causal 3x3 conv layers over (time, lag) with channels
  1->8->8->1 preserving the 257 lags, a 257->64 bottleneck FC, GRU, head.
* ``if``: two FC layers 90->64->64 on the spectral features, GRU, head.
* ``joint``: both paths; their outputs (64 + 257) concatenate into a 321->64
  bottleneck FC, then GRU and head.

Intermediate activations are tanh throughout; the head is a softmax. The GRU
carries separate input and recurrent biases, which is what makes the totals
land exactly on 47424 / 54689 / 68769 trainable parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

N_CLASSES = 192
PITCH_ANCHOR_HZ = 62.5
CENTS_PER_CLASS = 20.0

ARCH_KINDS = ("if", "xcorr", "joint")
FRAMES_PER_SECOND = 100


@dataclass(frozen=True)
class ArchSpec:
    """Dimension table for one estimator; canonical sizes via arch_spec()."""

    kind: str
    spectral_dim: int = 90
    lag_dim: int = 257
    hidden: int = 64
    conv_channels: tuple[int, int, int] = (8, 8, 1)
    classes: int = N_CLASSES

    def __post_init__(self):
        if self.kind not in ARCH_KINDS:
            raise ValueError(f"unknown arch kind {self.kind!r}")
        if self.conv_channels[-1] != 1:
            raise ValueError("last conv layer must emit a single channel")

    @property
    def has_spectral(self) -> bool:
        return self.kind in ("if", "joint")

    @property
    def has_xcorr(self) -> bool:
        return self.kind in ("xcorr", "joint")

    @property
    def gru_input(self) -> int:
        return self.hidden

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        """Ordered name -> shape table; FC weights are (out, in)."""
        h = self.hidden
        shapes: dict[str, tuple[int, ...]] = {}
        if self.has_spectral:
            shapes["if_fc1.w"] = (h, self.spectral_dim)
            shapes["if_fc1.b"] = (h,)
            shapes["if_fc2.w"] = (h, h)
            shapes["if_fc2.b"] = (h,)
        if self.has_xcorr:
            chans = (1,) + self.conv_channels
            for i in range(3):
                shapes[f"conv{i + 1}.k"] = (3, 3, chans[i], chans[i + 1])
                shapes[f"conv{i + 1}.b"] = (chans[i + 1],)
        if self.kind == "xcorr":
            shapes["bottleneck.w"] = (h, self.lag_dim)
            shapes["bottleneck.b"] = (h,)
        elif self.kind == "joint":
            shapes["bottleneck.w"] = (h, h + self.lag_dim)
            shapes["bottleneck.b"] = (h,)
        shapes["gru.wx"] = (3 * h, self.gru_input)
        shapes["gru.wh"] = (3 * h, h)
        shapes["gru.bx"] = (3 * h,)
        shapes["gru.bh"] = (3 * h,)
        shapes["out.w"] = (self.classes, h)
        shapes["out.b"] = (self.classes,)
        return shapes


def arch_spec(kind: str) -> ArchSpec:
    """Canonical spec for one of the three fixed architectures."""
    return ArchSpec(kind=kind)


def count_params(spec: ArchSpec) -> int:
    """Exact trainable parameter count (47424 / 54689 / 68769 canonically)."""
    return sum(math.prod(s) for s in spec.tensor_shapes().values())


# ---------------------------------------------------------------------------
# complexity accounting: analytic multiply-add counts, 1 MAC = 2 FLOPS,
# 100 frames per second of audio
# ---------------------------------------------------------------------------

def _dnn_macs_per_frame(spec: ArchSpec) -> int:
    h = spec.hidden
    macs = 0
    if spec.has_spectral:
        macs += spec.spectral_dim * h + h * h
    if spec.has_xcorr:
        chans = (1,) + spec.conv_channels
        for i in range(3):
            macs += spec.lag_dim * 9 * chans[i] * chans[i + 1]
    if spec.kind == "xcorr":
        macs += spec.lag_dim * h
    elif spec.kind == "joint":
        macs += (h + spec.lag_dim) * h
    macs += 3 * (spec.gru_input * h + h * h)
    macs += h * spec.classes
    return macs


def _fft_macs_per_frame(window: int) -> float:
    return 2.5 * window * math.log2(window)


def dnn_gflops(spec: ArchSpec) -> float:
    return _dnn_macs_per_frame(spec) * 2 * FRAMES_PER_SECOND / 1e9


def feature_gflops(spec: ArchSpec, window: int = 320) -> float:
    """Front-end cost: one FFT per frame for the spectral path, a full-window
    correlation over all 257 lags for the cross-correlation path."""
    g = 0.0
    if spec.has_spectral:
        g += _fft_macs_per_frame(window) * 2 * FRAMES_PER_SECOND / 1e9
    if spec.has_xcorr:
        g += spec.lag_dim * window * 2 * FRAMES_PER_SECOND / 1e9
    return g


def estimate_flops(spec: ArchSpec, include_features: bool = True,
                   window: int = 320) -> float:
    """Analytic FLOPS per second of audio for one estimator."""
    total = dnn_gflops(spec) * 1e9
    if include_features:
        total += feature_gflops(spec, window) * 1e9
    return total


def flops_breakdown(spec: ArchSpec, window: int = 320) -> dict[str, float]:
    """Complexity table in GFLOPS.

    The correlation front-end is costed at the full 320-sample window; the
    entry for a 160-sample correlation window is included as the natural
    cheaper accounting (exactly half), so both figures stay visible.
    """
    out: dict[str, float] = {}
    if spec.has_spectral:
        out["features_spectral"] = _fft_macs_per_frame(window) * 2 * FRAMES_PER_SECOND / 1e9
    if spec.has_xcorr:
        per_sample = spec.lag_dim * 2 * FRAMES_PER_SECOND / 1e9
        out["features_xcorr_window320"] = per_sample * window
        out["features_xcorr_window160"] = per_sample * (window // 2)
    out["features"] = feature_gflops(spec, window)
    out["dnn"] = dnn_gflops(spec)
    out["total"] = out["features"] + out["dnn"]
    return out
