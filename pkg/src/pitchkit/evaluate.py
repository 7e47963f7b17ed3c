"""Accuracy metrics, SNR sweeps, reference-corpus ingest, and histograms.

The accuracy unit is the cent: 1200 * log2(f / 62.5). An estimate is counted
correct when it lands within 50 cents of the reference, and only reference-
voiced frames enter the score (estimated voicing never does).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import csv
import math
import re
from pathlib import Path

import numpy as np

from .audio import AudioClip, AudioFormatError, read_wav
from .features import FrameGrid, frame_signal
from .nn.arch import PITCH_ANCHOR_HZ
from .track import PitchTrack

RCA_THRESHOLD_CENTS = 50.0


def hz_to_cents(f):
    """Cent value of a frequency relative to the 62.5 Hz anchor."""
    arr = np.asarray(f, dtype=np.float64)
    if np.any(arr <= 0):
        raise ValueError("frequency must be positive to convert to cents")
    out = 1200.0 * np.log2(arr / PITCH_ANCHOR_HZ)
    return float(out) if np.isscalar(f) or arr.ndim == 0 else out


def cents_to_hz(c):
    arr = np.asarray(c, dtype=np.float64)
    out = PITCH_ANCHOR_HZ * 2.0 ** (arr / 1200.0)
    return float(out) if np.isscalar(c) or arr.ndim == 0 else out


def _rca_counts(est: PitchTrack, ref: PitchTrack,
                threshold_cents: float) -> tuple[int, int]:
    if len(est) != len(ref):
        raise ValueError(f"track lengths differ: est {len(est)} vs ref {len(ref)}")
    mask = ref.voiced.astype(bool)
    total = int(mask.sum())
    if total == 0:
        return 0, 0
    ref_f0 = ref.f0_hz[mask]
    if np.any(ref_f0 <= 0):
        raise ValueError("reference marks voiced frames with non-positive f0")
    est_f0 = est.f0_hz[mask]
    diff = np.full(total, np.inf)
    ok = est_f0 > 0
    diff[ok] = np.abs(1200.0 * np.log2(est_f0[ok] / ref_f0[ok]))
    return int((diff < threshold_cents).sum()), total


def rca(est: PitchTrack, ref: PitchTrack,
        threshold_cents: float = RCA_THRESHOLD_CENTS) -> float:
    """Fraction of reference-voiced frames within `threshold_cents` of the
    reference. Estimated voicing is ignored; an estimate of 0 Hz counts as a
    miss. Raises when the reference has no voiced frames (0/0 is not 0)."""
    hits, total = _rca_counts(est, ref, threshold_cents)
    if total == 0:
        raise ValueError("reference track has no voiced frames")
    return hits / total


def mix_at_snr(clean: AudioClip, noise: AudioClip, snr_db) -> AudioClip:
    """Add noise scaled so the clean/noise energy ratio equals `snr_db`.

    `None` (or +inf) is the clean sentinel and returns the input untouched.
    Shorter noise is tiled; energies are measured over the whole clip.
    """
    if snr_db is None or (isinstance(snr_db, float) and math.isinf(snr_db)):
        return clean
    x = clean.samples.astype(np.float64)
    n = noise.samples.astype(np.float64)
    if len(n) == 0:
        raise ValueError("noise clip is empty")
    if len(n) < len(x):
        n = np.tile(n, int(np.ceil(len(x) / len(n))))
    n = n[: len(x)]
    e_clean = float(np.dot(x, x))
    e_noise = float(np.dot(n, n))
    if e_clean <= 0.0:
        raise ValueError("clean clip has zero energy; SNR undefined")
    if e_noise <= 0.0:
        raise ValueError("noise clip has zero energy over the mixed region")
    scale = math.sqrt(e_clean / (e_noise * 10.0 ** (snr_db / 10.0)))
    return AudioClip((x + scale * n).astype(np.float32))


# ---------------------------------------------------------------------------
# reference corpora
# ---------------------------------------------------------------------------

@dataclass
class ReferenceCorpus:
    """Clips with aligned per-frame reference pitch/voicing tracks."""

    ids: list[str]
    clips: list[AudioClip]
    refs: list[PitchTrack]
    groups: list[str] = field(default_factory=list)   # per-clip speaker group
    source: str = "synthetic"
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.groups:
            self.groups = ["all"] * len(self.ids)
        if not (len(self.ids) == len(self.clips) == len(self.refs) == len(self.groups)):
            raise ValueError("corpus columns must have equal length")

    def __len__(self):
        return len(self.ids)


@dataclass
class EvalReport:
    """Rows of (model, snr condition, pooled RCA, voiced-frame count)."""

    rows: list[dict]
    threshold_cents: float = RCA_THRESHOLD_CENTS
    corpus_id: str = ""
    seed: int = 0
    failures: list[str] = field(default_factory=list)


def snr_label(snr_db) -> str:
    if snr_db is None or (isinstance(snr_db, float) and math.isinf(snr_db)):
        return "clean"
    return f"{snr_db:g}"


def snr_sweep(models, corpus: ReferenceCorpus, noise_clips: list[AudioClip],
              snr_list, seed: int = 0,
              threshold_cents: float = RCA_THRESHOLD_CENTS,
              corpus_id: str = "") -> EvalReport:
    """RCA per (model, SNR) over a corpus, pooled across frames.

    `models` is a list of (name, estimate) pairs where estimate maps an
    AudioClip to a PitchTrack on the same frame grid. Noise assignment is
    a deterministic function of the seed and clip order, shared across
    models and SNR points so conditions stay comparable. Per-clip failures
    are recorded and skipped, not fatal.
    """
    rng = np.random.default_rng(seed)
    assigned = []
    for _ in corpus.ids:
        if noise_clips:
            idx = int(rng.integers(len(noise_clips)))
            offset = int(rng.integers(max(1, len(noise_clips[idx]))))
            rolled = np.roll(noise_clips[idx].samples, -offset)
            assigned.append(AudioClip(rolled))
        else:
            assigned.append(None)

    needs_noise = [s for s in snr_list if snr_label(s) != "clean"]
    if needs_noise and not noise_clips:
        raise ValueError("noisy SNR points requested but no noise clips given")

    report = EvalReport(rows=[], threshold_cents=threshold_cents,
                        corpus_id=corpus_id, seed=seed)
    for name, estimate in models:
        for snr in snr_list:
            hits = total = 0
            for i, clip_id in enumerate(corpus.ids):
                try:
                    mixed = (corpus.clips[i] if snr_label(snr) == "clean"
                             else mix_at_snr(corpus.clips[i], assigned[i], snr))
                    est = estimate(mixed)
                    h, t = _rca_counts(est, corpus.refs[i], threshold_cents)
                except Exception as e:  # noqa: BLE001 - collected, not fatal
                    report.failures.append(
                        f"{name} @ {snr_label(snr)} dB on {clip_id}: {e}")
                    continue
                hits += h
                total += t
            if total == 0:
                report.failures.append(
                    f"{name} @ {snr_label(snr)} dB: no voiced frames scored")
                continue
            report.rows.append({"model": name, "snr_db": snr_label(snr),
                                "rca": hits / total, "voiced_frames": total})
    return report


def write_report_csv(path, report: EvalReport) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "snr_db", "rca", "voiced_frames"])
        for r in report.rows:
            w.writerow([r["model"], r["snr_db"], f"{r['rca']:.6f}", r["voiced_frames"]])


# ---------------------------------------------------------------------------
# reference-layout ingest with label cleanup
# ---------------------------------------------------------------------------

DEFAULT_SEX_PATTERN = r"(?i)(female|male)"


def frame_energies(clip: AudioClip, grid: FrameGrid = FrameGrid()) -> np.ndarray:
    frames = frame_signal(clip, grid)
    return (frames * frames).sum(axis=1)


def apply_reference_cleanup(clip: AudioClip, track: PitchTrack, group: str,
                            female_min_hz: float = 125.0,
                            energy_floor_db: float = 40.0) -> PitchTrack:
    """Reference label cleanup; idempotent.

    (a) female reference frames below `female_min_hz` become unvoiced (the
        laryngograph-style octave artifacts); (b) frames more than
        `energy_floor_db` below the clip's peak frame energy become unvoiced.
    """
    f0 = track.f0_hz.copy()
    voiced = track.voiced.copy()
    if group == "female":
        bad = (voiced == 1) & (f0 < female_min_hz)
        voiced[bad] = 0
        f0[bad] = 0.0
    e = frame_energies(clip)[: len(track)]
    peak = e.max() if len(e) else 0.0
    floor = peak * 10.0 ** (-energy_floor_db / 10.0)
    quiet = np.zeros(len(track), dtype=bool)
    quiet[: len(e)] = e < floor
    quiet[len(e):] = True          # frames past the audio carry no evidence
    voiced[quiet] = 0
    f0[quiet] = 0.0
    return PitchTrack(f0, voiced, track.confidence.copy())


def ingest_ptdb_layout(root, ref_suffix: str = ".f0", pitch_column: int = 0,
                       sex_pattern: str = DEFAULT_SEX_PATTERN,
                       female_min_hz: float = 125.0,
                       energy_floor_db: float = 40.0) -> ReferenceCorpus:
    """Read a directory of WAVs with parallel whitespace-delimited reference
    files and apply the label cleanup above.

    The reference file shares the WAV's path with `ref_suffix` substituted;
    rows are whitespace-delimited with the pitch at `pitch_column` and
    non-positive pitch meaning unvoiced. The speaker group comes from the
    first `sex_pattern` match against the path (lowercased), else "unknown".
    Missing pairs and unreadable rows are reported in `diagnostics`, never
    fatal; unreadable rows are treated as unvoiced.
    """
    root = Path(root)
    pattern = re.compile(sex_pattern)
    ids, clips, refs, groups, diags = [], [], [], [], []
    grid = FrameGrid()
    for wav_path in sorted(root.rglob("*.wav")):
        ref_path = wav_path.with_suffix(ref_suffix)
        if not ref_path.exists():
            diags.append(f"{wav_path}: missing reference file {ref_path.name}")
            continue
        try:
            clip = read_wav(wav_path)
        except (AudioFormatError, OSError) as e:
            diags.append(f"{wav_path}: {e}")
            continue
        f0_rows = []
        for ln, line in enumerate(ref_path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                f0_rows.append(float(line.split()[pitch_column]))
            except (ValueError, IndexError):
                diags.append(f"{ref_path}:{ln}: unreadable row, treated as unvoiced")
                f0_rows.append(0.0)
        n = min(len(f0_rows), grid.frame_count(len(clip)))
        if n == 0:
            diags.append(f"{wav_path}: no overlapping frames between audio and reference")
            continue
        f0 = np.array(f0_rows[:n])
        f0[f0 < 0] = 0.0
        track = PitchTrack(f0, (f0 > 0).astype(np.uint8))
        # match on the corpus-internal path so directories above the root
        # cannot leak into the grouping
        m = pattern.search(str(wav_path.relative_to(root)))
        group = m.group(1).lower() if m else "unknown"
        track = apply_reference_cleanup(clip, track, group,
                                        female_min_hz, energy_floor_db)
        ids.append(str(wav_path.relative_to(root)))
        clips.append(clip)
        refs.append(track)
        groups.append(group)
    return ReferenceCorpus(ids=ids, clips=clips, refs=refs, groups=groups,
                           source="ptdb-layout", diagnostics=diags)


# ---------------------------------------------------------------------------
# pitch histogram (per-group voiced reference counts)
# ---------------------------------------------------------------------------

def pitch_histogram(corpus: ReferenceCorpus, bin_hz: float = 10.0) -> list[dict]:
    """Rows of (group, bin_low_hz, count) over voiced reference frames.

    Only nonzero bins are emitted; a group with no voiced frames simply
    contributes no rows.
    """
    by_group: dict[str, list[np.ndarray]] = {}
    for track, group in zip(corpus.refs, corpus.groups):
        mask = track.voiced.astype(bool)
        if mask.any():
            by_group.setdefault(group, []).append(track.f0_hz[mask])
    rows = []
    for group in sorted(by_group):
        f0 = np.concatenate(by_group[group])
        idx = np.floor(f0 / bin_hz).astype(int)
        for b in np.unique(idx):
            rows.append({"group": group, "bin_low_hz": float(b * bin_hz),
                         "count": int((idx == b).sum())})
    return rows


def write_histogram_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["group", "bin_low_hz", "count"])
        for r in rows:
            w.writerow([r["group"], f"{r['bin_low_hz']:g}", r["count"]])
