"""Streaming DSP front-end: residual cross-correlation and phase-delta features.

Two feature families per 10 ms frame of 16 kHz audio:

* cross-correlation of the LPC residual against its own past, lags 0..256,
  normalized to [-1, 1] (257 values);
* the first 30 STFT bins as log-magnitude plus the unit-normalized complex
  phase difference between consecutive frames (30 + 30 + 30 = 90 values).

Frames are 320 samples with a 160-sample hop and a rectangular window.
Computing frame m touches no sample beyond m*hop + window - 1, so the
front-end adds exactly one window (10 ms beyond the frame start) of delay.
"""
from __future__ import annotations

from dataclasses import dataclass
import struct

import numpy as np

from .audio import AudioClip
from . import lpc

MAX_LAG = 256
XCORR_DIM = MAX_LAG + 1
N_SPECTRAL_BINS = 30
IF_DIM = 3 * N_SPECTRAL_BINS
BOTH_DIM = XCORR_DIM + IF_DIM

# Lags below this are trivially self-correlated; argmax consumers (baseline
# pitch search) start here. 16000/32 = 500 Hz ceiling.
MIN_SEARCH_LAG = 32

ENERGY_EPS = 1e-9    # silence guard in the correlation normalizer
PHASE_EPS = 1e-12    # |delta| below this emits (0, 0) instead of delta/|delta|
LOG_FLOOR = 1e-9     # added to magnitudes before log


@dataclass(frozen=True)
class FrameGrid:
    """Analysis grid: frame m covers samples [m*hop, m*hop + window_len)."""

    window_len: int = 320
    hop: int = 160

    def frame_count(self, n_samples: int) -> int:
        if n_samples < self.window_len:
            return 0
        return (n_samples - self.window_len) // self.hop + 1

    def frame_end(self, m: int) -> int:
        """Index one past the last sample frame m may read."""
        return m * self.hop + self.window_len


class TooShortError(ValueError):
    """Clip shorter than one analysis window."""


def frame_signal(clip: AudioClip, grid: FrameGrid = FrameGrid()) -> np.ndarray:
    """Split a clip into (frame_count, window_len) rows; partial tail dropped."""
    n = len(clip)
    if n < grid.window_len:
        raise TooShortError(
            f"clip of {n} samples is shorter than one {grid.window_len}-sample window"
        )
    m = grid.frame_count(n)
    idx = np.arange(grid.window_len)[None, :] + grid.hop * np.arange(m)[:, None]
    return clip.samples[idx].astype(np.float64)


def stft_frame(frame: np.ndarray) -> np.ndarray:
    """Rectangular-window DFT of one frame, bins 0..len(frame)//2."""
    return np.fft.rfft(np.asarray(frame, dtype=np.float64))


def if_features(cur_bins: np.ndarray, prev_bins: np.ndarray) -> np.ndarray:
    """Log-magnitude plus unit phase-delta for the first 30 bins (90 values).

    delta[k] = cur[k] * conj(prev[k]); its normalized form is (0, 0) wherever
    |delta| is below the silence floor, so every emitted pair is either unit
    magnitude or exactly zero.
    """
    cur = np.asarray(cur_bins)[:N_SPECTRAL_BINS]
    prev = np.asarray(prev_bins)[:N_SPECTRAL_BINS]
    delta = cur * np.conj(prev)
    mag = np.abs(delta)
    ok = mag > PHASE_EPS
    safe = np.where(ok, mag, 1.0)
    re = np.where(ok, delta.real / safe, 0.0)
    im = np.where(ok, delta.imag / safe, 0.0)
    log_mag = np.log(np.abs(cur) + LOG_FLOOR)
    return np.concatenate([log_mag, re, im]).astype(np.float32)


def xcorr_frame(cur: np.ndarray, ext: np.ndarray) -> np.ndarray:
    """Normalized correlation of `cur` (one window) against its lagged past.

    `ext` holds the window plus MAX_LAG history samples immediately before it
    (zeros before stream start). Value at lag t is
    2*R[t] / (E_cur + E_lag[t] + eps) with R[t] the raw correlation and E the
    squared norms of the two length-N sequences, which bounds it to [-1, 1].
    """
    n = len(cur)
    assert len(ext) == n + MAX_LAG
    windows = np.lib.stride_tricks.sliding_window_view(ext, n)  # (MAX_LAG+1, n)
    r = windows @ cur                # r[k] pairs cur with ext[k:k+n]; lag = MAX_LAG-k
    csq = np.concatenate([[0.0], np.cumsum(ext * ext)])
    e_lag = csq[n:] - csq[:-n]       # energy of ext[k:k+n]
    e_cur = e_lag[-1]
    vals = 2.0 * r / (e_cur + e_lag + ENERGY_EPS)
    return vals[::-1].astype(np.float32)  # reorder to lag 0..MAX_LAG


@dataclass
class FeatureFrame:
    """Per-frame output; either family may be absent depending on `kind`."""

    xcorr: np.ndarray | None
    spectral: np.ndarray | None


class FeatureExtractor:
    """Stateful per-stream extractor. Feed samples, collect frames in order.

    One instance serves exactly one stream and must see its samples in order;
    run distinct streams on distinct instances. LPC (order 16) is refit every
    frame on the current window, and the residual stream is extended by the
    newly available samples under that frame's predictor.
    """

    def __init__(self, kind: str = "both", grid: FrameGrid = FrameGrid(),
                 lpc_order: int = lpc.DEFAULT_ORDER):
        if kind not in ("xcorr", "if", "both"):
            raise ValueError(f"unknown feature kind: {kind!r}")
        self.kind = kind
        self.grid = grid
        self.lpc_order = lpc_order
        self._buf = np.zeros(0, dtype=np.float64)   # all samples seen so far
        self._residual = np.zeros(0, dtype=np.float64)
        self._prev_bins = np.zeros(N_SPECTRAL_BINS, dtype=np.complex128)
        self._next_frame = 0

    @property
    def frames_emitted(self) -> int:
        return self._next_frame

    def push(self, samples) -> list[FeatureFrame]:
        """Append samples and return every newly completed frame."""
        samples = np.asarray(samples, dtype=np.float64).reshape(-1)
        self._buf = np.concatenate([self._buf, samples])
        out = []
        while len(self._buf) >= self.grid.frame_end(self._next_frame):
            out.append(self._process_frame(self._next_frame))
            self._next_frame += 1
        return out

    def _process_frame(self, m: int) -> FeatureFrame:
        n, h = self.grid.window_len, self.grid.hop
        window = self._buf[m * h : m * h + n]

        xc = None
        if self.kind in ("xcorr", "both"):
            self._extend_residual(m, window)
            cur = self._residual[m * h : m * h + n]
            start = m * h - MAX_LAG
            if start >= 0:
                ext = self._residual[start : m * h + n]
            else:
                ext = np.concatenate([np.zeros(-start), self._residual[: m * h + n]])
            xc = xcorr_frame(cur, ext)

        sf = None
        if self.kind in ("if", "both"):
            bins = stft_frame(window)[:N_SPECTRAL_BINS]
            sf = if_features(bins, self._prev_bins)
            self._prev_bins = bins

        return FeatureFrame(xcorr=xc, spectral=sf)

    def _extend_residual(self, m: int, window: np.ndarray) -> None:
        """Filter the newly available samples with this frame's predictor."""
        n, h = self.grid.window_len, self.grid.hop
        coeffs = lpc.lpc_analyze(window, self.lpc_order)
        block_start = 0 if m == 0 else m * h + n - h
        block = self._buf[block_start : m * h + n]
        hist_start = max(0, block_start - self.lpc_order)
        hist = self._buf[hist_start:block_start]
        if len(hist) < self.lpc_order:
            hist = np.concatenate([np.zeros(self.lpc_order - len(hist)), hist])
        fir = np.concatenate([[1.0], -coeffs])
        e = np.convolve(np.concatenate([hist, block]), fir)
        e = e[self.lpc_order : self.lpc_order + len(block)]
        self._residual = np.concatenate([self._residual, e])
        # only MAX_LAG + window of residual history is ever re-read, but the
        # buffer is kept whole for simplicity (clips are minutes, not hours)


def extract_features(clip: AudioClip, kind: str = "both",
                     grid: FrameGrid = FrameGrid()
                     ) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Run a fresh stream over a whole clip.

    Returns (xcorr, spectral) matrices of shape (frames, 257) / (frames, 90);
    either is None when not requested.
    """
    ex = FeatureExtractor(kind=kind, grid=grid)
    frames = ex.push(clip.samples)
    xc = np.stack([f.xcorr for f in frames]) if frames and kind != "if" else None
    sf = np.stack([f.spectral for f in frames]) if frames and kind != "xcorr" else None
    if not frames:
        m = 0
        xc = np.zeros((m, XCORR_DIM), np.float32) if kind != "if" else None
        sf = np.zeros((m, IF_DIM), np.float32) if kind != "xcorr" else None
    return xc, sf


# ---------------------------------------------------------------------------
# feature dump format: 16-byte header then frame-major float32 data
# ---------------------------------------------------------------------------

FEATURE_MAGIC = b"PKF1"
KIND_CODES = {"xcorr": 1, "if": 2, "both": 3}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}
KIND_DIMS = {"xcorr": XCORR_DIM, "if": IF_DIM, "both": BOTH_DIM}


class FeatureFileError(ValueError):
    pass


def write_features(path, kind: str, data: np.ndarray) -> None:
    """Write a (frames, dims) float32 matrix with the PKF1 header.

    For kind 'both' each row is the 257 correlation values followed by the
    90 spectral values.
    """
    dims = KIND_DIMS[kind]
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2 or data.shape[1] != dims:
        raise FeatureFileError(f"kind {kind!r} needs shape (frames, {dims}), got {data.shape}")
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIII", FEATURE_MAGIC, KIND_CODES[kind], data.shape[0], dims))
        f.write(data.tobytes())


def read_features(path) -> tuple[str, np.ndarray]:
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) < 16:
            raise FeatureFileError(f"{path}: truncated header")
        magic, code, frames, dims = struct.unpack("<4sIII", head)
        if magic != FEATURE_MAGIC:
            raise FeatureFileError(f"{path}: bad magic {magic!r}")
        if code not in KIND_NAMES:
            raise FeatureFileError(f"{path}: unknown feature kind code {code}")
        kind = KIND_NAMES[code]
        if dims != KIND_DIMS[kind]:
            raise FeatureFileError(f"{path}: kind {kind!r} dims {dims} != {KIND_DIMS[kind]}")
        raw = f.read(4 * frames * dims)
        if len(raw) < 4 * frames * dims:
            raise FeatureFileError(f"{path}: truncated data")
    return kind, np.frombuffer(raw, dtype="<f4").reshape(frames, dims).copy()


def split_both(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 'both' matrix back into (xcorr, spectral) views."""
    return data[:, :XCORR_DIM], data[:, XCORR_DIM:]
