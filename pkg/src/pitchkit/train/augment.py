"""Label-preserving signal augmentation: gain, random biquad, additive noise.

A fifth of the data stays untouched; the rest gets an independently sampled
gain in [-60, 10] dB, a random stable biquad with coefficients in
[-3/8, 3/8], and noise mixed at an SNR drawn from a small grid (with a clean
slot). Pitch and voicing labels pass through unchanged by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from ..audio import AudioClip
from .corpus import LabeledClip

IIR_COEFF_BOUND = 3.0 / 8.0


@dataclass(frozen=True)
class AugmentConfig:
    gain_db_range: tuple[float, float] = (-60.0, 10.0)
    iir_coeff_range: tuple[float, float] = (-IIR_COEFF_BOUND, IIR_COEFF_BOUND)
    snr_db_choices: tuple = (None, 20.0, 10.0, 5.0, 0.0)   # None = no noise
    clean_fraction: float = 0.2
    max_filter_tries: int = 100

    def __post_init__(self):
        if not 0.0 <= self.clean_fraction <= 1.0:
            raise ValueError("clean_fraction must lie in [0, 1]")


def biquad_is_stable(a1: float, a2: float) -> bool:
    """Poles of 1 + a1 z^-1 + a2 z^-2 inside the unit circle (triangle test)."""
    return abs(a2) < 1.0 and abs(a1) < 1.0 + a2


def sample_biquad(rng, cfg: AugmentConfig) -> tuple[np.ndarray, np.ndarray]:
    """(b, a) with b0 = a0 = 1 and the other four coefficients in range."""
    lo, hi = cfg.iir_coeff_range
    for _ in range(cfg.max_filter_tries):
        b1, b2, a1, a2 = rng.uniform(lo, hi, size=4)
        if biquad_is_stable(a1, a2):
            return np.array([1.0, b1, b2]), np.array([1.0, a1, a2])
    raise RuntimeError(
        f"no stable biquad after {cfg.max_filter_tries} draws from [{lo}, {hi}]"
    )


def augment(clip: LabeledClip, cfg: AugmentConfig, rng,
            noise_clips: list[AudioClip] | None = None) -> LabeledClip:
    """One augmented copy; labels are the same arrays' values bit for bit."""
    if rng.random() < cfg.clean_fraction:
        return LabeledClip(clip.audio, clip.f0_hz.copy(), clip.voiced.copy(),
                           {"kind": "clean"})

    x = clip.audio.samples.astype(np.float64)
    record: dict = {"kind": "augmented"}

    gain_db = float(rng.uniform(*cfg.gain_db_range))
    x = x * 10.0 ** (gain_db / 20.0)
    record["gain_db"] = gain_db

    b, a = sample_biquad(rng, cfg)
    x = lfilter(b, a, x)
    record["biquad_b"] = [float(v) for v in b]
    record["biquad_a"] = [float(v) for v in a]

    snr_db = cfg.snr_db_choices[int(rng.integers(len(cfg.snr_db_choices)))]
    e_signal = float(np.dot(x, x))
    if snr_db is None or not noise_clips or e_signal <= 0.0:
        record["snr_db"] = "clean"
    else:
        idx = int(rng.integers(len(noise_clips)))
        noise = noise_clips[idx].samples.astype(np.float64)
        if len(noise) < len(x):
            noise = np.tile(noise, int(np.ceil(len(x) / len(noise))))
        offset = int(rng.integers(len(noise)))
        noise = np.roll(noise, -offset)[: len(x)]
        e_noise = float(np.dot(noise, noise))
        if e_noise > 0.0:
            scale = np.sqrt(e_signal / (e_noise * 10.0 ** (snr_db / 10.0)))
            x = x + scale * noise
            record["snr_db"] = snr_db
            record["noise_index"] = idx
            record["noise_offset"] = offset
        else:
            record["snr_db"] = "clean"

    # saturate like the 16-bit corpus container does, so a clip loaded back
    # from disk is the clip that was trained on; memoryless clipping leaves
    # the labels exact
    return LabeledClip(AudioClip(np.clip(x, -1.0, 1.0).astype(np.float32)),
                       clip.f0_hz.copy(), clip.voiced.copy(), record)


def augment_corpus(clips: list[LabeledClip], cfg: AugmentConfig, rng,
                   noise_clips: list[AudioClip] | None = None) -> list[LabeledClip]:
    return [augment(c, cfg, rng, noise_clips) for c in clips]
