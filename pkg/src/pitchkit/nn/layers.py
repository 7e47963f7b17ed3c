"""Layer forward primitives shared by the streaming runtime and the trainer.

Dtype follows the weights: float32 in production, float64 in gradient checks.
"""
from __future__ import annotations

import numpy as np


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def fc_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
               activation: str = "tanh") -> np.ndarray:
    """y = act(x @ w.T + b) with w of shape (out, in); x may be batched."""
    if x.shape[-1] != w.shape[1]:
        raise ValueError(f"fc input dim {x.shape[-1]} != weight dim {w.shape[1]}")
    y = x @ w.T + b
    if activation == "tanh":
        return np.tanh(y)
    if activation == "none":
        return y
    raise ValueError(f"unknown activation {activation!r}")


def conv2d_causal_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray,
                          activation: str = "tanh") -> np.ndarray:
    """Causal 3x3 convolution over (time, lag) preserving both extents.

    x: (batch, time, lags, in_ch). The kernel is (3, 3, in_ch, out_ch) with
    the first index running over input frames [t-2, t-1, t] (index 2 = the
    current frame; no future frames enter) and the second over lags
    [l-1, l, l+1]. Time history and the lag borders are zero-padded.
    """
    if x.ndim != 4:
        raise ValueError(f"conv input must be (batch, time, lags, ch), got {x.shape}")
    if kernel.shape[:2] != (3, 3) or kernel.shape[2] != x.shape[3]:
        raise ValueError(f"kernel {kernel.shape} incompatible with input {x.shape}")
    _, t, l, _ = x.shape
    xp = np.pad(x, ((0, 0), (2, 0), (1, 1), (0, 0)))
    y = np.broadcast_to(bias, x.shape[:3] + (kernel.shape[3],)).copy()
    for dt in range(3):
        for dl in range(3):
            y += xp[:, dt : dt + t, dl : dl + l, :] @ kernel[dt, dl]
    if activation == "tanh":
        return np.tanh(y)
    if activation == "none":
        return y
    raise ValueError(f"unknown activation {activation!r}")


def gru_step(h: np.ndarray, x: np.ndarray, wx: np.ndarray, wh: np.ndarray,
             bx: np.ndarray, bh: np.ndarray) -> np.ndarray:
    """One GRU step; h and x may carry a leading batch axis.

    Gates are stacked [update, reset, candidate] along the first weight axis,
    with separate input and recurrent biases:

        z = sig(Wz x + bzx + Uz h + bzh)
        r = sig(Wr x + brx + Ur h + brh)
        c = tanh(Wc x + bcx + r * (Uc h + bch))
        h' = (1 - z) * h + z * c
    """
    n = h.shape[-1]
    gx = x @ wx.T + bx
    gh = h @ wh.T + bh
    z = sigmoid(gx[..., :n] + gh[..., :n])
    r = sigmoid(gx[..., n : 2 * n] + gh[..., n : 2 * n])
    c = np.tanh(gx[..., 2 * n :] + r * gh[..., 2 * n :])
    return (1.0 - z) * h + z * c


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax along the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)
