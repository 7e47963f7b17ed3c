"""Training loop: augment once, extract features once, then Adam over
shuffled non-overlapping 100-frame sequences.

Everything downstream of the config seed is deterministic: augmentation
draws, shuffles, and initialization all come from one generator, and the
numeric path is plain numpy.
"""
from __future__ import annotations

from dataclasses import dataclass
import csv
from pathlib import Path

import numpy as np

from ..features import extract_features
from ..nn.arch import arch_spec
from ..nn.model import NumericError, class_to_hz
from ..nn.weights import ModelWeights, init_weights, save_weights
from .adam import adam_init, adam_step
from .augment import AugmentConfig, augment_corpus
from .backprop import backward_batch, forward_batch
from .corpus import LabeledClip
from .loss import quantize_pitch, weighted_xent


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    seq_len: int = 100          # frames per sequence (1 s)
    learning_rate: float = 1e-3
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seq_len < 2:
            raise ValueError("seq_len must be >= 2")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class PreparedData:
    """Stacked training sequences: (sequences, seq_len, ...) arrays."""

    xcorr: np.ndarray | None
    spectral: np.ndarray | None
    targets: np.ndarray
    voiced: np.ndarray

    @property
    def n_sequences(self) -> int:
        return len(self.targets)


def _clip_arrays(clip: LabeledClip, kind: str):
    xc, sf = extract_features(clip.audio, kind)
    targets = np.zeros(clip.n_frames, dtype=np.int64)
    mask = clip.voiced == 1
    if mask.any():
        targets[mask] = quantize_pitch(clip.f0_hz[mask])
    return xc, sf, targets, clip.voiced.astype(np.uint8)


def prepare_sequences(clips: list[LabeledClip], kind: str,
                      seq_len: int) -> PreparedData:
    """Chop per-clip features into non-overlapping sequences and stack them."""
    xcs, sfs, tgs, vcs = [], [], [], []
    for clip in clips:
        xc, sf, tg, vc = _clip_arrays(clip, kind)
        for s in range(clip.n_frames // seq_len):
            lo, hi = s * seq_len, (s + 1) * seq_len
            if xc is not None:
                xcs.append(xc[lo:hi])
            if sf is not None:
                sfs.append(sf[lo:hi])
            tgs.append(tg[lo:hi])
            vcs.append(vc[lo:hi])
    if not tgs:
        raise ValueError("corpus too short for even one training sequence")
    return PreparedData(
        xcorr=np.stack(xcs) if xcs else None,
        spectral=np.stack(sfs) if sfs else None,
        targets=np.stack(tgs),
        voiced=np.stack(vcs),
    )


def prepare_heldout(clips: list[LabeledClip], kind: str) -> list[tuple]:
    """Whole-clip (xcorr, spectral, f0_hz, voiced) tuples for held-out scoring."""
    out = []
    for clip in clips:
        xc, sf, _, vc = _clip_arrays(clip, kind)
        out.append((xc, sf, clip.f0_hz.copy(), vc))
    return out


def heldout_rca(weights: ModelWeights, heldout: list[tuple],
                threshold_cents: float = 50.0) -> float:
    """Pooled RCA of argmax decoding against the exact reference f0."""
    hits = total = 0
    for xc, sf, f0_ref, vc in heldout:
        probs, _ = forward_batch(
            weights,
            xcorr=None if xc is None else xc[None],
            spectral=None if sf is None else sf[None],
        )
        est = class_to_hz(probs[0].argmax(axis=-1))
        mask = vc == 1
        if not mask.any():
            continue
        diff = np.abs(1200.0 * np.log2(est[mask] / f0_ref[mask]))
        hits += int((diff < threshold_cents).sum())
        total += int(mask.sum())
    if total == 0:
        raise ValueError("held-out set has no voiced frames")
    return hits / total


def write_training_log(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "step", "loss", "heldout_rca"])
        for r in rows:
            rca = r.get("heldout_rca", "")
            w.writerow([r["epoch"], r["step"], f"{r['loss']:.6f}",
                        "" if rca == "" else f"{rca:.6f}"])


def train(kind: str, clips: list[LabeledClip] | None = None,
          config: TrainConfig = TrainConfig(),
          augment_cfg: AugmentConfig | None = None,
          noise_clips=None,
          heldout: list[LabeledClip] | None = None,
          prepared: PreparedData | None = None,
          heldout_prepared: list[tuple] | None = None,
          log_path=None, checkpoint_dir=None,
          initial: ModelWeights | None = None):
    """Train one architecture; returns (weights, log rows).

    Data can arrive as LabeledClips (augmented and featurized here) or as
    PreparedData (already featurized; augmentation is the caller's business).
    """
    rng = np.random.default_rng(config.seed)

    if prepared is None:
        if clips is None:
            raise ValueError("need either clips or prepared data")
        if augment_cfg is not None:
            clips = augment_corpus(clips, augment_cfg, rng, noise_clips)
        prepared = prepare_sequences(clips, kind, config.seq_len)
    if heldout_prepared is None and heldout is not None:
        heldout_prepared = prepare_heldout(heldout, kind)

    n_frames = prepared.n_sequences * config.seq_len
    if config.epochs > 0 and n_frames < config.batch_size * config.seq_len:
        raise ValueError(
            f"corpus has {n_frames} frames; need >= batch_size*seq_len = "
            f"{config.batch_size * config.seq_len}"
        )

    weights = initial.copy() if initial is not None else init_weights(
        arch_spec(kind), seed=config.seed)
    opt = adam_init(weights)
    log_rows: list[dict] = []
    step = 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(prepared.n_sequences)
        epoch_losses = []
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo : lo + config.batch_size]
            probs, cache = forward_batch(
                weights,
                xcorr=None if prepared.xcorr is None else prepared.xcorr[idx],
                spectral=None if prepared.spectral is None else prepared.spectral[idx],
            )
            loss, dlogits = weighted_xent(probs, prepared.targets[idx],
                                          prepared.voiced[idx])
            if not np.isfinite(loss):
                raise NumericError(f"loss diverged at epoch {epoch} step {step}")
            grads = backward_batch(weights, cache, dlogits)
            adam_step(weights, grads, opt, lr=config.learning_rate,
                      beta1=config.beta1, beta2=config.beta2, eps=config.eps)
            step += 1
            epoch_losses.append(loss)
            log_rows.append({"epoch": epoch, "step": step, "loss": loss,
                             "heldout_rca": ""})
        summary = {"epoch": epoch, "step": step,
                   "loss": float(np.mean(epoch_losses)), "heldout_rca": ""}
        if heldout_prepared:
            summary["heldout_rca"] = heldout_rca(weights, heldout_prepared)
        log_rows.append(summary)
        if checkpoint_dir is not None:
            ckdir = Path(checkpoint_dir)
            ckdir.mkdir(parents=True, exist_ok=True)
            save_weights(ckdir / f"epoch_{epoch:03d}.pkw", weights)

    if log_path is not None:
        write_training_log(log_path, log_rows)
    return weights, log_rows
