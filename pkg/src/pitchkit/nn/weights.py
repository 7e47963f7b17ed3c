"""Weight containers, seeded initialization, and the versioned file format.

File layout (all little-endian): magic "PKW1", format version u32, arch code
u32, tensor count u32; then per tensor a u16 length-prefixed utf-8 name, u8
rank, u32 dims, and raw float32 data in row-major order. Loads validate the
arch's full shape table, so a truncated, corrupted, or wrong-arch file fails
with a distinct diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import struct

import numpy as np

from .arch import ArchSpec, arch_spec, count_params

WEIGHT_MAGIC = b"PKW1"
WEIGHT_VERSION = 1
ARCH_CODES = {"if": 1, "xcorr": 2, "joint": 3}
ARCH_NAMES = {v: k for k, v in ARCH_CODES.items()}


class WeightFormatError(ValueError):
    pass


@dataclass
class ModelWeights:
    """Named tensors for one architecture; order follows the shape table."""

    spec: ArchSpec
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def validate(self) -> None:
        shapes = self.spec.tensor_shapes()
        if list(self.tensors) != list(shapes):
            raise WeightFormatError(
                f"tensor names {sorted(self.tensors)} != expected {sorted(shapes)}"
            )
        for name, shape in shapes.items():
            if self.tensors[name].shape != shape:
                raise WeightFormatError(
                    f"tensor {name}: shape {self.tensors[name].shape} != {shape}"
                )

    def n_params(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def astype(self, dtype) -> "ModelWeights":
        return ModelWeights(self.spec, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.spec, {k: v.copy() for k, v in self.tensors.items()})


def _fan_in_out(name: str, shape: tuple[int, ...]) -> tuple[int, int]:
    if name.endswith(".k"):  # conv: (3, 3, in_ch, out_ch) over 9 taps
        return 9 * shape[2], 9 * shape[3]
    return shape[1], shape[0]  # fc / gru weight matrices are (out, in)


def init_weights(spec: ArchSpec, seed: int, dtype=np.float32) -> ModelWeights:
    """Seeded uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases.

    GRU matrices (input and recurrent alike) use the same uniform rule; no
    orthogonalization, so a seed fully determines every byte.
    """
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in spec.tensor_shapes().items():
        if name.endswith(".b") or name.startswith("gru.b"):
            tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in, fan_out = _fan_in_out(name, shape)
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            tensors[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    w = ModelWeights(spec, tensors)
    w.validate()
    return w


def save_weights(path, weights: ModelWeights) -> None:
    weights.validate()
    if weights.spec != arch_spec(weights.spec.kind):
        raise WeightFormatError("only the three canonical architectures are serializable")
    with open(path, "wb") as f:
        f.write(struct.pack("<4sIII", WEIGHT_MAGIC, WEIGHT_VERSION,
                            ARCH_CODES[weights.spec.kind], len(weights.tensors)))
        for name, t in weights.tensors.items():
            enc = name.encode("utf-8")
            f.write(struct.pack("<H", len(enc)))
            f.write(enc)
            f.write(struct.pack("<B", t.ndim))
            f.write(struct.pack(f"<{t.ndim}I", *t.shape))
            f.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    raw = f.read(n)
    if len(raw) != n:
        raise WeightFormatError(f"truncated weight file while reading {what}")
    return raw


def load_weights(path) -> ModelWeights:
    with open(path, "rb") as f:
        magic, version, code, count = struct.unpack("<4sIII", _read_exact(f, 16, "header"))
        if magic != WEIGHT_MAGIC:
            raise WeightFormatError(f"bad magic {magic!r} (not a weight file)")
        if version != WEIGHT_VERSION:
            raise WeightFormatError(f"unsupported weight format version {version}")
        if code not in ARCH_NAMES:
            raise WeightFormatError(f"unknown arch code {code}")
        spec = arch_spec(ARCH_NAMES[code])
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "tensor name length"))
            name = _read_exact(f, name_len, "tensor name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(f, 1, "tensor rank"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, "tensor shape"))
            size = math.prod(shape)
            data = _read_exact(f, 4 * size, f"tensor {name} data")
            tensors[name] = np.frombuffer(data, dtype="<f4").reshape(shape).copy()
        if f.read(1):
            raise WeightFormatError("trailing bytes after final tensor")
    w = ModelWeights(spec, tensors)
    w.validate()
    if w.n_params() != count_params(spec):
        raise WeightFormatError(
            f"parameter count {w.n_params()} != expected {count_params(spec)}"
        )
    return w
