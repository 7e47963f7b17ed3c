import numpy as np
import pytest

from pitchkit.audio import AudioClip, SAMPLE_RATE


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tone(freq_hz, seconds=1.0, amp=0.5, phase=0.0):
    n = int(seconds * SAMPLE_RATE)
    t = np.arange(n) / SAMPLE_RATE
    return AudioClip(amp * np.cos(2 * np.pi * freq_hz * t + phase))


def sawtooth(freq_hz, seconds=1.0, amp=0.4):
    """Phase-accumulator sawtooth; supports non-integer periods."""
    n = int(seconds * SAMPLE_RATE)
    phase = np.cumsum(np.full(n, freq_hz / SAMPLE_RATE))
    return AudioClip(amp * (2.0 * (phase % 1.0) - 1.0))
