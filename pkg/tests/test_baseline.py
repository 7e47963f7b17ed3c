"""DSP baseline tracker: lag mapping, locking, octave safety, voicing."""
import numpy as np
import pytest

from conftest import sawtooth

from pitchkit.audio import SAMPLE_RATE, AudioClip
from pitchkit.baseline import (
    LpeConfig,
    LpeTracker,
    estimate_baseline,
    estimate_baseline_streaming,
    lag_error_cents,
    lag_to_hz,
)

WARMUP = 3     # LPC bootstrap plus DP lock-in; decisions settle after this


def cents_off(est_hz, true_hz):
    return 1200.0 * np.abs(np.log2(np.asarray(est_hz) / true_hz))


def peak_frames(peaks, n_frames, n_lags=257):
    """Constructed correlation frames with the given {lag: value} peaks."""
    x = np.zeros((n_frames, n_lags), dtype=np.float32)
    x[:, 0] = 1.0
    for lag, val in peaks.items():
        x[:, lag] = val
    return x


# ---------------------------------------------------------------------------
# lag mapping
# ---------------------------------------------------------------------------

def test_lag_to_hz_known_values():
    assert lag_to_hz(160) == 100.0
    assert lag_to_hz(256) == 62.5
    assert lag_to_hz(32) == 500.0


def test_lag_to_hz_rejects_zero():
    with pytest.raises(ValueError):
        lag_to_hz(0)


def test_lag_error_bound_values():
    # 100 Hz sits exactly on lag 160: bound is log2(160.5/160)
    assert lag_error_cents(100.0) == pytest.approx(5.4, abs=0.1)
    assert lag_error_cents(400.0) == pytest.approx(21.5, abs=0.1)


def test_lag_error_bound_grows_with_f0():
    f = np.geomspace(62.5, 500.0, 20)
    bound = lag_error_cents(f)
    assert np.all(np.diff(bound) > 0)
    assert np.all(bound < 50.0)          # inside the RCA threshold everywhere


def test_lag_error_rejects_nonpositive():
    with pytest.raises(ValueError):
        lag_error_cents(0.0)


# ---------------------------------------------------------------------------
# real-signal behaviour
# ---------------------------------------------------------------------------

def test_locks_100hz_sawtooth_to_exact_lag():
    track = estimate_baseline(sawtooth(100.0, 1.5))
    est = track.f0_hz[WARMUP:]
    # period is exactly 160 samples; allow one lag quantum either side
    lo, hi = SAMPLE_RATE / 161.0, SAMPLE_RATE / 159.0
    good = (est >= lo) & (est <= hi)
    assert good.mean() >= 0.99
    assert track.voiced[WARMUP:].all()


@pytest.mark.parametrize("f0", [70.0, 123.4, 200.0, 387.3])
def test_tracks_constant_f0_within_threshold(f0):
    track = estimate_baseline(sawtooth(f0, 1.0))
    err = cents_off(track.f0_hz[WARMUP:], f0)
    assert (err < 50.0).mean() >= 0.95


def test_silence_is_unvoiced():
    track = estimate_baseline(AudioClip(np.zeros(SAMPLE_RATE)))
    assert not track.voiced.any()
    np.testing.assert_array_equal(track.confidence, 0.0)


def test_white_noise_rarely_voiced(rng):
    fracs = []
    for _ in range(20):
        clip = AudioClip(0.1 * rng.standard_normal(SAMPLE_RATE // 2))
        fracs.append(estimate_baseline(clip).voiced.mean())
    assert np.mean(fracs) < 0.10


def test_confidence_clipped_to_unit_interval():
    track = estimate_baseline(sawtooth(150.0, 0.5))
    assert np.all(track.confidence >= 0.0)
    assert np.all(track.confidence <= 1.0)
    assert track.confidence[track.voiced.astype(bool)].min() > 0.3


# ---------------------------------------------------------------------------
# constructed-peak octave behaviour
# ---------------------------------------------------------------------------

def test_prefers_true_period_over_double():
    # persistent alias at twice the period, slightly weaker
    frames = peak_frames({80: 1.0, 160: 0.95}, 50)
    track = LpeTracker().run(frames)
    np.testing.assert_allclose(track.f0_hz[1:], lag_to_hz(80))


def test_short_lag_preference_does_not_cause_octave_up():
    # true period 160 with a half-period alias almost as strong
    frames = peak_frames({160: 1.0, 80: 0.9}, 50)
    track = LpeTracker().run(frames)
    np.testing.assert_allclose(track.f0_hz[1:], lag_to_hz(160))


def test_stays_locked_through_brief_alias_flip():
    a = peak_frames({80: 1.0, 160: 0.95}, 30)
    b = peak_frames({80: 0.95, 160: 1.0}, 3)      # momentary flip
    track = LpeTracker().run(np.concatenate([a, b, a]))
    assert (track.f0_hz[5:] == lag_to_hz(80)).all()


def test_split_peak_beats_aligned_double():
    # fractional period: mass split over two bins at T, concentrated at 2T
    frames = peak_frames({115: 0.66, 116: 0.33, 231: 1.0}, 40)
    track = LpeTracker().run(frames)
    assert np.all(track.f0_hz[3:] >= lag_to_hz(117))


def test_weak_peak_is_unvoiced():
    frames = peak_frames({100: 0.25}, 10)
    track = LpeTracker().run(frames)
    assert not track.voiced.any()


def test_voicing_threshold_is_configurable():
    frames = peak_frames({100: 0.25}, 10)
    track = LpeTracker(LpeConfig(voicing_threshold=0.2)).run(frames)
    assert track.voiced[1:].all()


# ---------------------------------------------------------------------------
# streaming and causality
# ---------------------------------------------------------------------------

def test_streaming_matches_batch():
    clip = sawtooth(140.0, 1.0)
    batch = estimate_baseline(clip)
    chunks = np.array_split(clip.samples, 23)
    stream = list(estimate_baseline_streaming(iter(chunks)))
    assert len(stream) == len(batch)
    f0 = np.array([s[0] for s in stream])
    voiced = np.array([s[1] for s in stream])
    np.testing.assert_array_equal(f0, batch.f0_hz)
    np.testing.assert_array_equal(voiced, batch.voiced)


def test_decisions_are_causal():
    x = sawtooth(120.0, 1.0).samples.copy()
    from pitchkit.features import FrameGrid
    grid = FrameGrid()
    m = 40
    corrupted = x.copy()
    corrupted[grid.frame_end(m):] = 0.31 * np.random.default_rng(0).standard_normal(
        len(x) - grid.frame_end(m))
    a = estimate_baseline(AudioClip(x))
    b = estimate_baseline(AudioClip(corrupted))
    np.testing.assert_array_equal(a.f0_hz[: m + 1], b.f0_hz[: m + 1])
    np.testing.assert_array_equal(a.voiced[: m + 1], b.voiced[: m + 1])
    assert not np.array_equal(a.f0_hz[m + 1:], b.f0_hz[m + 1:])


def test_tracker_reset_forgets_history():
    frames_a = peak_frames({200: 0.9}, 20)
    frames_b = peak_frames({90: 0.9}, 20)
    tracker = LpeTracker()
    tracker.run(frames_a)
    tracker.reset()
    track = tracker.run(frames_b)
    assert track.f0_hz[0] == lag_to_hz(90)


def test_config_rejects_bad_lag_range():
    with pytest.raises(ValueError):
        LpeConfig(min_lag=0)
    with pytest.raises(ValueError):
        LpeConfig(min_lag=100, max_lag=50)
