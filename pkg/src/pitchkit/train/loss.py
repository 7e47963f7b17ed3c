"""Pitch-class targets and the voicing-weighted cross-entropy.

Unvoiced frames carry weight zero, and the batch loss divides by the voiced
count, so a batch's loss is the mean negative log-probability of the correct
class over exactly the frames that have a pitch.
"""
from __future__ import annotations

import numpy as np

from ..nn.arch import CENTS_PER_CLASS, N_CLASSES, PITCH_ANCHOR_HZ

PROB_FLOOR = 1e-12


def quantize_pitch(f0_hz):
    """Nearest 20-cent class index in [0, 191]; rejects non-positive f0."""
    f = np.asarray(f0_hz, dtype=np.float64)
    if np.any(f <= 0):
        raise ValueError("f0 must be positive; mask unvoiced frames instead")
    cents = 1200.0 * np.log2(f / PITCH_ANCHOR_HZ)
    cls = np.floor(cents / CENTS_PER_CLASS + 0.5).astype(np.int64)
    cls = np.clip(cls, 0, N_CLASSES - 1)
    return int(cls) if np.isscalar(f0_hz) or cls.ndim == 0 else cls


def weighted_xent(probs: np.ndarray, targets: np.ndarray,
                  voiced: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and its gradient with respect to the pre-softmax logits.

    probs: (..., classes) softmax outputs; targets: integer classes;
    voiced: {0,1} weights, same shape as targets. Returns
    (sum of voiced -log p[target] / voiced count, dlogits). The gradient
    uses the closed form (probs - onehot) * voiced / voiced_count. A batch
    with no voiced frames contributes zero loss and zero gradient.
    """
    probs = np.asarray(probs)
    targets = np.asarray(targets)
    voiced = np.asarray(voiced).astype(probs.dtype)
    n_voiced = float(voiced.sum())
    dlogits = np.zeros_like(probs)
    if n_voiced == 0.0:
        return 0.0, dlogits
    picked = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    loss = float((voiced * -np.log(np.maximum(picked, PROB_FLOOR))).sum() / n_voiced)
    dlogits = probs * voiced[..., None]
    np.put_along_axis(
        dlogits, targets[..., None],
        np.take_along_axis(dlogits, targets[..., None], axis=-1) - voiced[..., None],
        axis=-1,
    )
    return loss, dlogits / n_voiced
