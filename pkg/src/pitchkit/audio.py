"""Mono 16 kHz audio container and 16-bit PCM WAV I/O.

Everything downstream assumes exactly this format; anything else is rejected
up front with a diagnostic naming the offending property.
"""
from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np

SAMPLE_RATE = 16000


class AudioFormatError(ValueError):
    """Input audio violates the fixed mono / 16 kHz / finite-sample contract."""


@dataclass
class AudioClip:
    """Finite mono samples, nominally in [-1, 1], at a fixed 16 kHz rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32).reshape(-1)
        if self.sample_rate != SAMPLE_RATE:
            raise AudioFormatError(
                f"sample rate must be {SAMPLE_RATE} Hz, got {self.sample_rate}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise AudioFormatError("samples contain NaN or Inf")

    def __len__(self):
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> AudioClip:
    """Read a mono 16-bit PCM WAV at 16 kHz; reject any other flavour."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            n = w.getnframes()
            raw = w.readframes(n)
    except (wave.Error, EOFError) as e:
        raise AudioFormatError(f"{path}: not a readable WAV file ({e})") from e
    if channels != 1:
        raise AudioFormatError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise AudioFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if rate != SAMPLE_RATE:
        raise AudioFormatError(f"{path}: expected {SAMPLE_RATE} Hz, got {rate} Hz")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float32) / 32768.0
    return AudioClip(samples)


def write_wav(path, clip: AudioClip) -> None:
    """Write a clip as mono 16-bit PCM, clamping samples to [-1, 1]."""
    x = np.clip(clip.samples, -1.0, 1.0)
    pcm = np.round(x * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(pcm.tobytes())
