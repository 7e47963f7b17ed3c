"""Batched forward pass with cached activations, and exact backprop.

Mirrors the streaming runtime layer for layer (zero conv time history, zero
initial GRU state), so weights trained here drop straight into it. Shapes
are taken from the weight tensors, not hardcoded, which lets the gradient
checks run the same code on small double-precision models.

Sequence layout: (batch, time, ...) with the full sequence backpropagated
(no truncation inside a sequence).
"""
from __future__ import annotations

import numpy as np

from ..nn.layers import sigmoid, softmax
from ..nn.model import NumericError
from ..nn.weights import ModelWeights


def forward_batch(weights: ModelWeights, xcorr: np.ndarray | None = None,
                  spectral: np.ndarray | None = None) -> tuple[np.ndarray, dict]:
    """Probabilities (batch, time, classes) plus the activation cache."""
    t = weights.tensors
    spec = weights.spec
    dtype = next(iter(t.values())).dtype
    cache: dict = {}
    parts = []

    if spec.has_spectral:
        if spectral is None:
            raise ValueError(f"arch {spec.kind!r} needs spectral features")
        x0 = np.asarray(spectral, dtype=dtype)
        a1 = np.tanh(x0 @ t["if_fc1.w"].T + t["if_fc1.b"])
        a2 = np.tanh(a1 @ t["if_fc2.w"].T + t["if_fc2.b"])
        cache.update(sf_in=x0, sf_a1=a1, sf_a2=a2)
        parts.append(a2)

    if spec.has_xcorr:
        if xcorr is None:
            raise ValueError(f"arch {spec.kind!r} needs cross-correlation features")
        c = np.asarray(xcorr, dtype=dtype)[..., None]       # (B, T, L, 1)
        cache["conv_in"] = c
        for i in range(3):
            c = _conv_forward(c, t[f"conv{i + 1}.k"], t[f"conv{i + 1}.b"])
            cache[f"conv{i + 1}_out"] = c
        parts.append(c[..., 0])

    feat = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=-1)
    cache["feat"] = feat
    if "bottleneck.w" in t:
        g = np.tanh(feat @ t["bottleneck.w"].T + t["bottleneck.b"])
        cache["bneck_out"] = g
    else:
        g = feat
    cache["gru_in"] = g

    bsz, steps, _ = g.shape
    h = spec.hidden
    H = np.zeros((bsz, steps + 1, h), dtype=dtype)
    Z = np.empty((bsz, steps, h), dtype=dtype)
    R = np.empty_like(Z)
    C = np.empty_like(Z)
    GHc = np.empty_like(Z)           # recurrent candidate pre-gate, r applies to it
    wx, wh, bx, bh = t["gru.wx"], t["gru.wh"], t["gru.bx"], t["gru.bh"]
    for s in range(steps):
        gx = g[:, s] @ wx.T + bx
        gh = H[:, s] @ wh.T + bh
        z = sigmoid(gx[:, :h] + gh[:, :h])
        r = sigmoid(gx[:, h : 2 * h] + gh[:, h : 2 * h])
        ghc = gh[:, 2 * h :]
        c = np.tanh(gx[:, 2 * h :] + r * ghc)
        H[:, s + 1] = (1.0 - z) * H[:, s] + z * c
        Z[:, s], R[:, s], C[:, s], GHc[:, s] = z, r, c, ghc
    cache.update(H=H, Z=Z, R=R, C=C, GHc=GHc)

    logits = H[:, 1:] @ t["out.w"].T + t["out.b"]
    probs = softmax(logits)
    cache["probs"] = probs
    return probs, cache


def _conv_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    _, steps, lags, _ = x.shape
    xp = np.pad(x, ((0, 0), (2, 0), (1, 1), (0, 0)))
    y = np.broadcast_to(bias, x.shape[:3] + (kernel.shape[3],)).copy()
    for dt in range(3):
        for dl in range(3):
            y += xp[:, dt : dt + steps, dl : dl + lags, :] @ kernel[dt, dl]
    return np.tanh(y)


def _conv_backward(x: np.ndarray, y: np.ndarray, kernel: np.ndarray,
                   dy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dkernel, dbias) for y = tanh(conv(x))."""
    _, steps, lags, _ = x.shape
    dz = dy * (1.0 - y * y)
    xp = np.pad(x, ((0, 0), (2, 0), (1, 1), (0, 0)))
    dxp = np.zeros_like(xp)
    dk = np.empty_like(kernel)
    for dt in range(3):
        for dl in range(3):
            patch = xp[:, dt : dt + steps, dl : dl + lags, :]
            dk[dt, dl] = np.tensordot(patch, dz, axes=([0, 1, 2], [0, 1, 2]))
            dxp[:, dt : dt + steps, dl : dl + lags, :] += dz @ kernel[dt, dl].T
    db = dz.sum(axis=(0, 1, 2))
    return dxp[:, 2 : 2 + steps, 1 : 1 + lags, :], dk, db


def _fc_backward_tanh(x, y, w, dy):
    dz = dy * (1.0 - y * y)
    dw = np.tensordot(dz, x, axes=([0, 1], [0, 1]))
    return dz @ w, dw, dz.sum(axis=(0, 1))


def backward_batch(weights: ModelWeights, cache: dict,
                   dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the scalar loss for every tensor, given d loss/d logits."""
    t = weights.tensors
    spec = weights.spec
    grads: dict[str, np.ndarray] = {}

    H = cache["H"]
    grads["out.w"] = np.tensordot(dlogits, H[:, 1:], axes=([0, 1], [0, 1]))
    grads["out.b"] = dlogits.sum(axis=(0, 1))
    dh_out = dlogits @ t["out.w"]

    g = cache["gru_in"]
    Z, R, C, GHc = cache["Z"], cache["R"], cache["C"], cache["GHc"]
    wx, wh = t["gru.wx"], t["gru.wh"]
    h = spec.hidden
    bsz, steps, _ = g.shape
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    dbx = np.zeros_like(t["gru.bx"])
    dbh = np.zeros_like(t["gru.bh"])
    dG = np.empty_like(g)
    dh = np.zeros((bsz, h), dtype=g.dtype)
    for s in reversed(range(steps)):
        dh = dh + dh_out[:, s]
        z, r, c, ghc, h_prev = Z[:, s], R[:, s], C[:, s], GHc[:, s], H[:, s]
        dz = dh * (c - h_prev)
        dc_pre = dh * z * (1.0 - c * c)
        dh_prev = dh * (1.0 - z)
        dr = dc_pre * ghc
        dghc = dc_pre * r
        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dgx = np.concatenate([dz_pre, dr_pre, dc_pre], axis=-1)
        dgh = np.concatenate([dz_pre, dr_pre, dghc], axis=-1)
        dwx += dgx.T @ g[:, s]
        dwh += dgh.T @ h_prev
        dbx += dgx.sum(axis=0)
        dbh += dgh.sum(axis=0)
        dG[:, s] = dgx @ wx
        dh = dh_prev + dgh @ wh
    grads.update({"gru.wx": dwx, "gru.wh": dwh, "gru.bx": dbx, "gru.bh": dbh})

    if "bottleneck.w" in t:
        dfeat, dw, db = _fc_backward_tanh(cache["feat"], cache["bneck_out"],
                                          t["bottleneck.w"], dG)
        grads["bottleneck.w"] = dw
        grads["bottleneck.b"] = db
    else:
        dfeat = dG

    if spec.has_spectral and spec.has_xcorr:
        dsf, dconv = dfeat[..., :h], dfeat[..., h:]
    elif spec.has_spectral:
        dsf, dconv = dfeat, None
    else:
        dsf, dconv = None, dfeat

    if dconv is not None:
        dc = dconv[..., None]
        layer_in = [cache["conv_in"], cache["conv1_out"], cache["conv2_out"]]
        for i in (3, 2, 1):
            dc, dk, db = _conv_backward(layer_in[i - 1], cache[f"conv{i}_out"],
                                        t[f"conv{i}.k"], dc)
            grads[f"conv{i}.k"] = dk
            grads[f"conv{i}.b"] = db

    if dsf is not None:
        da1, dw2, db2 = _fc_backward_tanh(cache["sf_a1"], cache["sf_a2"],
                                          t["if_fc2.w"], dsf)
        _, dw1, db1 = _fc_backward_tanh(cache["sf_in"], cache["sf_a1"],
                                        t["if_fc1.w"], da1)
        grads.update({"if_fc1.w": dw1, "if_fc1.b": db1,
                      "if_fc2.w": dw2, "if_fc2.b": db2})

    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for tensor {name!r}")
    return {name: grads[name] for name in t}        # weight-table order
