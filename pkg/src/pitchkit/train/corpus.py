"""Synthetic labelled speech-like corpus with exact per-frame pitch labels.

Clips interleave voiced, unvoiced, and silent segments. Voiced excitation is
a pulse train or sawtooth driven by a phase accumulator over a log-domain
random-walk f0 trajectory (with occasional fast glides and cycle-rate
jitter), shaped by a random all-pole resonator and faded in and out, so the
per-sample f0 is known exactly at generation time rather than estimated.
Per-frame labels: a frame is voiced only when its whole analysis window lies
inside a voiced segment; its f0 label is the mean instantaneous f0 over the
window (the window's true average phase-advance rate).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import csv
import json
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from ..audio import SAMPLE_RATE, AudioClip, read_wav, write_wav
from ..features import FrameGrid


@dataclass
class LabeledClip:
    audio: AudioClip
    f0_hz: np.ndarray            # per-frame Hz, 0 where unvoiced
    voiced: np.ndarray           # per-frame {0, 1}
    augmentation: dict = field(default_factory=lambda: {"kind": "clean"})

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64).reshape(-1)
        self.voiced = np.asarray(self.voiced).astype(np.uint8).reshape(-1)
        frames = FrameGrid().frame_count(len(self.audio))
        if not (len(self.f0_hz) == len(self.voiced) == frames):
            raise ValueError(
                f"labels ({len(self.f0_hz)}) must match clip frame count ({frames})"
            )

    @property
    def n_frames(self) -> int:
        return len(self.f0_hz)


@dataclass(frozen=True)
class VoiceProfile:
    """Generation knobs; the default targets a 40-70% voiced corpus.

    The defaults deliberately include the awkward parts of real voicing:
    fast glides on top of the basic drift, cycle-level jitter, short voiced
    runs, and faded onsets/offsets whose low-level periodicity is easy to
    miss. A corpus without these rewards aggressive temporal smoothing far
    more than real speech does.
    """

    f0_min_hz: float = 70.0
    f0_max_hz: float = 400.0
    f0_step_octaves: float = 0.02       # random-walk step per 10 ms, log domain
    f0_glide_prob: float = 0.03         # chance per frame of a fast glide step
    f0_glide_octaves: float = 0.1       # scale of those steps
    jitter: float = 0.01                # rms relative f0 perturbation, cycle rate
    clip_seconds: float = 4.0
    voiced_seconds: tuple[float, float] = (0.15, 0.7)
    unvoiced_seconds: tuple[float, float] = (0.2, 0.8)
    silence_seconds: tuple[float, float] = (0.1, 0.5)
    silence_prob: float = 0.35          # chance a gap is silence vs noise
    amp_range: tuple[float, float] = (0.08, 0.5)
    fade_seconds: tuple[float, float] = (0.02, 0.12)   # onset/offset ramps
    fade_floor: float = 0.2             # ramps start soft, not silent
    aspiration_range: tuple[float, float] = (0.01, 0.08)  # per-segment noise floor


def _random_allpole(rng, n_resonances=None):
    """Vocal-tract-like resonator: 2-4 random formant poles, unit DC-ish gain."""
    n = int(rng.integers(2, 5)) if n_resonances is None else n_resonances
    a = np.array([1.0])
    for _ in range(n):
        fc = rng.uniform(300.0, 3500.0)
        bw = rng.uniform(80.0, 400.0)
        r = np.exp(-np.pi * bw / SAMPLE_RATE)
        theta = 2.0 * np.pi * fc / SAMPLE_RATE
        a = np.convolve(a, [1.0, -2.0 * r * np.cos(theta), r * r])
    return a


def _f0_walk(rng, n_frames: int, profile: VoiceProfile) -> np.ndarray:
    """Per-frame f0 via a reflected random walk in log2 Hz."""
    lo, hi = np.log2(profile.f0_min_hz), np.log2(profile.f0_max_hz)
    margin = min(0.1, (hi - lo) / 2.0)     # degenerate ranges stay valid
    x = np.empty(n_frames)
    x[0] = rng.uniform(lo + margin, hi - margin) if hi > lo else lo
    steps = rng.normal(0.0, profile.f0_step_octaves, size=n_frames - 1)
    if profile.f0_glide_prob > 0.0 and n_frames > 1:
        glides = rng.random(n_frames - 1) < profile.f0_glide_prob
        steps[glides] += rng.normal(0.0, profile.f0_glide_octaves,
                                    size=int(glides.sum()))
    for i in range(1, n_frames):
        v = x[i - 1] + steps[i - 1]
        # reflect at the band edges
        if v < lo:
            v = 2 * lo - v
        elif v > hi:
            v = 2 * hi - v
        x[i] = v
    return 2.0 ** x


def _voiced_segment(rng, n: int, profile: VoiceProfile):
    """Returns (samples, per-sample f0) for one voiced stretch."""
    hop = FrameGrid().hop
    n_pts = n // hop + 2
    f0_frames = _f0_walk(rng, n_pts, profile)
    f0 = np.interp(np.arange(n), np.arange(n_pts) * hop, f0_frames)

    if profile.jitter > 0.0:
        # cycle-rate wobble; labels stay exact because they integrate the
        # same perturbed instantaneous f0 the excitation does
        alpha = np.exp(-2.0 * np.pi * float(f0.mean()) / SAMPLE_RATE)
        wobble = lfilter([1.0 - alpha], [1.0, -alpha], rng.standard_normal(n))
        f0 = f0 * (1.0 + profile.jitter * wobble / max(np.std(wobble), 1e-12))

    phase = np.cumsum(f0 / SAMPLE_RATE)
    if rng.random() < 0.5:
        # pulse train; fractional positions split across adjacent samples
        exc = np.zeros(n)
        crossings = np.nonzero(np.diff(np.floor(phase)) > 0)[0]
        for i in crossings:
            frac = (np.ceil(phase[i]) - phase[i]) / (phase[i + 1] - phase[i])
            exc[i] += 1.0 - frac
            if i + 1 < n:
                exc[i + 1] += frac
    else:
        exc = 2.0 * (phase % 1.0) - 1.0
    exc = exc + rng.uniform(*profile.aspiration_range) * rng.standard_normal(n)

    a = _random_allpole(rng)
    y = lfilter([1.0], a, exc)
    peak = np.abs(y).max()
    if peak > 0:
        y = y / peak
    fade = min(int(rng.uniform(*profile.fade_seconds) * SAMPLE_RATE), n // 2)
    if fade > 0:
        lo = profile.fade_floor
        ramp = lo + (1.0 - lo) * (0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade))
        y[:fade] *= ramp
        y[n - fade:] *= ramp[::-1]
    return y * rng.uniform(*profile.amp_range), f0


def _unvoiced_segment(rng, n: int, profile: VoiceProfile) -> np.ndarray:
    y = lfilter([1.0], _random_allpole(rng, 2), rng.standard_normal(n))
    peak = np.abs(y).max()
    if peak > 0:
        y = y / peak
    return y * rng.uniform(*profile.amp_range) * 0.6


def synth_clip(rng, profile: VoiceProfile = VoiceProfile()) -> LabeledClip:
    """One clip of interleaved voiced / unvoiced / silence segments."""
    n_total = int(profile.clip_seconds * SAMPLE_RATE)
    samples = np.zeros(n_total)
    f0_sample = np.zeros(n_total)        # per-sample instantaneous f0
    voiced_sample = np.zeros(n_total, dtype=bool)

    pos = 0
    want_voiced = rng.random() < 0.7     # usually open with voicing
    while pos < n_total:
        if want_voiced:
            n = int(rng.uniform(*profile.voiced_seconds) * SAMPLE_RATE)
            n = min(n, n_total - pos)
            seg, f0 = _voiced_segment(rng, n, profile)
            samples[pos : pos + n] = seg
            f0_sample[pos : pos + n] = f0
            voiced_sample[pos : pos + n] = True
        elif rng.random() < profile.silence_prob:
            n = int(rng.uniform(*profile.silence_seconds) * SAMPLE_RATE)
            n = min(n, n_total - pos)
        else:
            n = int(rng.uniform(*profile.unvoiced_seconds) * SAMPLE_RATE)
            n = min(n, n_total - pos)
            samples[pos : pos + n] = _unvoiced_segment(rng, n, profile)
        pos += n
        want_voiced = not want_voiced

    grid = FrameGrid()
    n_frames = grid.frame_count(n_total)
    f0_label = np.zeros(n_frames)
    voiced_label = np.zeros(n_frames, dtype=np.uint8)
    for m in range(n_frames):
        lo, hi = m * grid.hop, m * grid.hop + grid.window_len
        if voiced_sample[lo:hi].all():
            voiced_label[m] = 1
            f0_label[m] = f0_sample[lo:hi].mean()

    clip = AudioClip(np.clip(samples, -1.0, 1.0).astype(np.float32))
    return LabeledClip(clip, f0_label, voiced_label)


def synth_corpus(seed: int, minutes: float,
                 profile: VoiceProfile = VoiceProfile()) -> list[LabeledClip]:
    """Deterministic corpus of `minutes` of labelled audio."""
    if minutes <= 0:
        raise ValueError("minutes must be positive")
    rng = np.random.default_rng(seed)
    n_clips = max(1, round(minutes * 60.0 / profile.clip_seconds))
    return [synth_clip(rng, profile) for _ in range(n_clips)]


def voiced_fraction(clips: list[LabeledClip]) -> float:
    frames = sum(c.n_frames for c in clips)
    voiced = sum(int(c.voiced.sum()) for c in clips)
    return voiced / frames if frames else 0.0


def _shaped_noise(rng, n: int) -> np.ndarray:
    y = lfilter([1.0], _random_allpole(rng, 2), rng.standard_normal(n))
    # slow amplitude modulation so the noise is not perfectly stationary
    env = 1.0 + 0.5 * np.sin(2.0 * np.pi * rng.uniform(0.2, 2.0)
                             * np.arange(n) / SAMPLE_RATE + rng.uniform(0, 7))
    return y * env


def _burst_noise(rng, n: int) -> np.ndarray:
    """Shaped noise gated on and off: keyboard clatter, doors, crackle."""
    y = lfilter([1.0], _random_allpole(rng, 2), rng.standard_normal(n))
    seg = int(rng.uniform(0.05, 0.3) * SAMPLE_RATE)
    gates = rng.random(n // seg + 1) < 0.55
    env = np.repeat(gates.astype(np.float64), seg)[:n]
    ramp = int(0.02 * SAMPLE_RATE)   # 20 ms edges instead of clicks
    env = np.convolve(env, np.ones(ramp) / ramp, mode="same")
    return y * (0.05 + 0.95 * env)


def _hum_noise(rng, n: int) -> np.ndarray:
    """Slowly drifting harmonic stack: mains hum, engines, fans."""
    f0 = rng.uniform(45.0, 130.0)
    inst = f0 * (1.0 + np.cumsum(rng.normal(0.0, 2e-5, size=n)))
    phase = np.cumsum(inst / SAMPLE_RATE)
    y = np.zeros(n)
    for h in range(1, int(2000.0 / f0) + 1):
        y += (rng.uniform(0.5, 1.0) / h
              * np.sin(2.0 * np.pi * h * phase + rng.uniform(0, 7)))
    return y + 0.05 * rng.standard_normal(n)


def _clutter_noise(rng, n: int) -> np.ndarray:
    """A handful of windowed tone bursts over a low noise floor."""
    y = 0.05 * rng.standard_normal(n)
    for _ in range(int(rng.integers(6, 13))):
        length = int(rng.uniform(0.1, 0.5) * SAMPLE_RATE)
        start = int(rng.integers(0, max(1, n - length)))
        t = np.arange(length)
        burst = np.sin(2.0 * np.pi * rng.uniform(100.0, 3000.0)
                       * t / SAMPLE_RATE + rng.uniform(0, 7))
        y[start:start + length] += rng.uniform(0.4, 1.0) * np.hanning(length) * burst
    return y


def _babble_noise(rng, n: int) -> np.ndarray:
    """Several overlapped synthetic voices: speech-shaped and modulated but
    with no stable pitch period of its own."""
    y = np.zeros(n)
    profile = VoiceProfile()
    for _ in range(8):
        voice, _ = _voiced_segment(rng, n, profile)
        y += rng.uniform(0.3, 1.0) * voice
    return y


_NOISE_MAKERS = (_shaped_noise, _burst_noise, _hum_noise, _clutter_noise,
                 _babble_noise)


def synth_noise_library(seed: int, count: int = 8,
                        seconds: float = 5.0) -> list[AudioClip]:
    """Mixed-character noise clips for augmentation and SNR mixing.

    Cycles through shaped broadband noise, gated bursts, harmonic hum, tonal
    clutter, and babble, so noise robustness is exercised against periodic,
    speech-shaped, and nonstationary interference rather than wideband hiss
    alone.
    """
    rng = np.random.default_rng(seed)
    n = int(seconds * SAMPLE_RATE)
    out = []
    for i in range(count):
        y = _NOISE_MAKERS[i % len(_NOISE_MAKERS)](rng, n)
        y = 0.3 * y / np.abs(y).max()
        out.append(AudioClip(y.astype(np.float32)))
    return out


# ---------------------------------------------------------------------------
# on-disk layout: WAV + label CSV per clip, one JSON manifest
# ---------------------------------------------------------------------------

def save_corpus(out_dir, clips: list[LabeledClip], seed: int | None = None) -> Path:
    """Write clips and labels; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, clip in enumerate(clips):
        wav = f"clip_{i:04d}.wav"
        labels = f"clip_{i:04d}.labels.csv"
        write_wav(out_dir / wav, clip.audio)
        with open(out_dir / labels, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["frame", "f0_hz", "voiced"])
            for m in range(clip.n_frames):
                w.writerow([m, f"{clip.f0_hz[m]:.6f}", int(clip.voiced[m])])
        entries.append({"wav": wav, "labels": labels,
                        "augmentation": clip.augmentation})
    manifest = {"seed": seed, "clips": entries}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_corpus(corpus_dir) -> list[LabeledClip]:
    corpus_dir = Path(corpus_dir)
    manifest = json.loads((corpus_dir / "manifest.json").read_text())
    clips = []
    for entry in manifest["clips"]:
        audio = read_wav(corpus_dir / entry["wav"])
        f0, voiced = [], []
        with open(corpus_dir / entry["labels"], newline="") as f:
            for row in csv.DictReader(f):
                f0.append(float(row["f0_hz"]))
                voiced.append(int(row["voiced"]))
        clips.append(LabeledClip(audio, np.array(f0), np.array(voiced),
                                 entry.get("augmentation", {"kind": "clean"})))
    return clips
