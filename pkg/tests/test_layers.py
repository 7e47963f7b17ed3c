import numpy as np
import pytest

from pitchkit.nn.layers import (
    conv2d_causal_forward,
    fc_forward,
    gru_step,
    sigmoid,
    softmax,
)


def naive_fc(x, w, b, act):
    out = np.empty(w.shape[0])
    for o in range(w.shape[0]):
        s = b[o]
        for i in range(w.shape[1]):
            s += x[i] * w[o, i]
        out[o] = np.tanh(s) if act == "tanh" else s
    return out


def naive_causal_conv(x, kernel, bias):
    """Four-loop reference: input frames [t-2, t-1, t], lags [l-1, l, l+1]."""
    bsz, t_len, l_len, in_ch = x.shape
    out_ch = kernel.shape[3]
    y = np.zeros((bsz, t_len, l_len, out_ch))
    for b in range(bsz):
        for t in range(t_len):
            for l in range(l_len):
                for o in range(out_ch):
                    s = bias[o]
                    for dt in range(3):
                        ti = t + dt - 2
                        for dl in range(3):
                            li = l + dl - 1
                            if 0 <= ti < t_len and 0 <= li < l_len:
                                s += np.dot(x[b, ti, li], kernel[dt, dl, :, o])
                    y[b, t, l, o] = np.tanh(s)
    return y


def naive_gru(h, x, wx, wh, bx, bh):
    n = len(h)
    z = sigmoid(wx[:n] @ x + bx[:n] + wh[:n] @ h + bh[:n])
    r = sigmoid(wx[n : 2 * n] @ x + bx[n : 2 * n] + wh[n : 2 * n] @ h + bh[n : 2 * n])
    c = np.tanh(wx[2 * n :] @ x + bx[2 * n :] + r * (wh[2 * n :] @ h + bh[2 * n :]))
    return (1.0 - z) * h + z * c


# ---------------------------------------------------------------------------
# fully connected
# ---------------------------------------------------------------------------

def test_fc_matches_loop_oracle(rng):
    x = rng.standard_normal(7)
    w = rng.standard_normal((5, 7))
    b = rng.standard_normal(5)
    for act in ("tanh", "none"):
        np.testing.assert_allclose(fc_forward(x, w, b, act), naive_fc(x, w, b, act),
                                   atol=1e-12)


def test_fc_identity_passthrough():
    x = np.array([0.1, -0.2, 0.3])
    y = fc_forward(x, np.eye(3), np.zeros(3), "none")
    np.testing.assert_array_equal(y, x)


def test_fc_batched_rows_independent(rng):
    x = rng.standard_normal((4, 6))
    w = rng.standard_normal((3, 6))
    b = rng.standard_normal(3)
    y = fc_forward(x, w, b)
    for i in range(4):
        np.testing.assert_allclose(y[i], fc_forward(x[i], w, b), atol=1e-12)


def test_fc_dim_mismatch_raises(rng):
    with pytest.raises(ValueError):
        fc_forward(np.zeros(5), np.zeros((3, 6)), np.zeros(3))
    with pytest.raises(ValueError):
        fc_forward(np.zeros(5), np.zeros((3, 5)), np.zeros(3), activation="relu")


# ---------------------------------------------------------------------------
# causal convolution
# ---------------------------------------------------------------------------

def test_conv_matches_loop_oracle(rng):
    x = rng.standard_normal((2, 5, 9, 3))
    k = rng.standard_normal((3, 3, 3, 2))
    b = rng.standard_normal(2)
    np.testing.assert_allclose(conv2d_causal_forward(x, k, b),
                               naive_causal_conv(x, k, b), atol=1e-10)


def test_conv_is_causal_in_time(rng):
    x = rng.standard_normal((1, 8, 9, 2))
    k = rng.standard_normal((3, 3, 2, 2))
    b = rng.standard_normal(2)
    ref = conv2d_causal_forward(x, k, b)
    x2 = x.copy()
    x2[:, 5:] += 10.0
    got = conv2d_causal_forward(x2, k, b)
    np.testing.assert_array_equal(got[:, :5], ref[:, :5])
    assert not np.array_equal(got[:, 5], ref[:, 5])


def test_conv_preserves_extents(rng):
    x = rng.standard_normal((3, 4, 257, 1))
    k = rng.standard_normal((3, 3, 1, 8))
    y = conv2d_causal_forward(x, k, np.zeros(8))
    assert y.shape == (3, 4, 257, 8)


def test_conv_impulse_reads_kernel_taps():
    # single unit impulse at (t=2, l=4): output at (t, l) sees input (t-2..t,
    # l-1..l+1), so y[2, 4, 0] picks kernel tap (dt=2, dl=1) = current/center
    x = np.zeros((1, 5, 9, 1))
    x[0, 2, 4, 0] = 1.0
    k = np.arange(9, dtype=float).reshape(3, 3, 1, 1)
    y = conv2d_causal_forward(x, k, np.zeros(1), activation="none")
    assert y[0, 2, 4, 0] == k[2, 1, 0, 0]
    assert y[0, 2, 5, 0] == k[2, 0, 0, 0]   # impulse is at its left lag
    assert y[0, 3, 4, 0] == k[1, 1, 0, 0]   # impulse is one frame in its past
    assert y[0, 1, 4, 0] == 0.0             # no look-ahead in time


def test_conv_rejects_bad_shapes():
    with pytest.raises(ValueError):
        conv2d_causal_forward(np.zeros((2, 5, 9)), np.zeros((3, 3, 1, 1)), np.zeros(1))
    with pytest.raises(ValueError):
        conv2d_causal_forward(np.zeros((1, 5, 9, 2)), np.zeros((3, 3, 1, 1)), np.zeros(1))


# ---------------------------------------------------------------------------
# gru
# ---------------------------------------------------------------------------

def test_gru_matches_loop_oracle(rng):
    n, d = 5, 4
    h = rng.standard_normal(n)
    x = rng.standard_normal(d)
    wx = rng.standard_normal((3 * n, d))
    wh = rng.standard_normal((3 * n, n))
    bx = rng.standard_normal(3 * n)
    bh = rng.standard_normal(3 * n)
    np.testing.assert_allclose(gru_step(h, x, wx, wh, bx, bh),
                               naive_gru(h, x, wx, wh, bx, bh), atol=1e-12)


def test_gru_zero_weights_halve_state():
    # z = sigmoid(0) = 0.5 and c = 0, so h' = 0.5 h
    h = np.array([0.4, -0.8])
    out = gru_step(h, np.zeros(3), np.zeros((6, 3)), np.zeros((6, 2)),
                   np.zeros(6), np.zeros(6))
    np.testing.assert_allclose(out, 0.5 * h, atol=1e-12)


def test_gru_batched_matches_single(rng):
    n, d = 4, 3
    h = rng.standard_normal((5, n))
    x = rng.standard_normal((5, d))
    wx = rng.standard_normal((3 * n, d))
    wh = rng.standard_normal((3 * n, n))
    bx = rng.standard_normal(3 * n)
    bh = rng.standard_normal(3 * n)
    batch = gru_step(h, x, wx, wh, bx, bh)
    for i in range(5):
        np.testing.assert_allclose(batch[i], gru_step(h[i], x[i], wx, wh, bx, bh),
                                   atol=1e-12)


def test_gru_state_stays_bounded(rng):
    # h' is a convex blend of h in [-1,1] and c in (-1,1)
    n = 6
    h = np.zeros(n)
    wx = rng.standard_normal((3 * n, n)) * 3
    wh = rng.standard_normal((3 * n, n)) * 3
    bx = rng.standard_normal(3 * n)
    bh = rng.standard_normal(3 * n)
    for _ in range(200):
        h = gru_step(h, rng.standard_normal(n) * 5, wx, wh, bx, bh)
    assert np.all(np.abs(h) <= 1.0)


# ---------------------------------------------------------------------------
# softmax
# ---------------------------------------------------------------------------

def test_softmax_basic_properties(rng):
    p = softmax(rng.standard_normal((4, 9)))
    np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(p > 0)


def test_softmax_shift_invariant(rng):
    z = rng.standard_normal(12)
    np.testing.assert_allclose(softmax(z), softmax(z + 123.0), atol=1e-12)


def test_softmax_handles_large_logits():
    p = softmax(np.array([1000.0, 0.0, -1000.0]))
    assert np.isfinite(p).all()
    assert p[0] == pytest.approx(1.0)


def test_softmax_uniform_on_equal_logits():
    np.testing.assert_allclose(softmax(np.full(192, 3.7)), 1.0 / 192, atol=1e-12)
