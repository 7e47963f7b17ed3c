"""Per-frame pitch tracks: the exchange format between estimators and metrics.

CSV columns: frame,time_s,f0_hz,confidence,voiced (time_s is the frame start,
m * 0.01 s). The binary twin is headerless: per frame a little-endian float32
f0_hz, float32 confidence, uint8 voiced flag (9 bytes per frame).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
import struct

import numpy as np

FRAME_PERIOD_S = 0.01


@dataclass
class PitchTrack:
    f0_hz: np.ndarray        # per-frame Hz; 0 where unvoiced estimators emit none
    voiced: np.ndarray       # per-frame {0, 1}
    confidence: np.ndarray | None = None

    def __post_init__(self):
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64).reshape(-1)
        self.voiced = np.asarray(self.voiced).astype(np.uint8).reshape(-1)
        if self.confidence is None:
            self.confidence = self.voiced.astype(np.float64)
        self.confidence = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
        if not (len(self.f0_hz) == len(self.voiced) == len(self.confidence)):
            raise ValueError("track arrays must have equal length")

    def __len__(self):
        return len(self.f0_hz)


def write_track_csv(path, track: PitchTrack) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["frame", "time_s", "f0_hz", "confidence", "voiced"])
        for m in range(len(track)):
            w.writerow([m, f"{m * FRAME_PERIOD_S:.2f}", f"{track.f0_hz[m]:.6f}",
                        f"{track.confidence[m]:.6f}", int(track.voiced[m])])


def read_track_csv(path) -> PitchTrack:
    f0, conf, voiced = [], [], []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            f0.append(float(row["f0_hz"]))
            conf.append(float(row["confidence"]))
            voiced.append(int(row["voiced"]))
    return PitchTrack(np.array(f0), np.array(voiced), np.array(conf))


def write_track_binary(path, track: PitchTrack) -> None:
    with open(path, "wb") as f:
        for m in range(len(track)):
            f.write(struct.pack("<ffB", track.f0_hz[m], track.confidence[m],
                                int(track.voiced[m])))


def read_track_binary(path) -> PitchTrack:
    f0, conf, voiced = [], [], []
    with open(path, "rb") as f:
        while True:
            rec = f.read(9)
            if not rec:
                break
            if len(rec) < 9:
                raise ValueError(f"{path}: truncated record")
            a, b, c = struct.unpack("<ffB", rec)
            f0.append(a)
            conf.append(b)
            voiced.append(c)
    return PitchTrack(np.array(f0), np.array(voiced), np.array(conf))
