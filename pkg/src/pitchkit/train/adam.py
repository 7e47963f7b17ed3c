"""Adam with standard bias correction, one (m, v) pair per named tensor."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn.weights import ModelWeights


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_init(weights: ModelWeights) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(w) for k, w in weights.tensors.items()},
        v={k: np.zeros_like(w) for k, w in weights.tensors.items()},
    )


def adam_step(weights: ModelWeights, grads: dict[str, np.ndarray],
              state: AdamState, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One in-place update; a zero gradient leaves the weights unchanged."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for name, w in weights.tensors.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        w -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
