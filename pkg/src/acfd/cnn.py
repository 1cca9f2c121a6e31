"""Small convolutional classifier: forward, backward, Adam, serialization.

Canonical architecture for 64x64xC spectrogram images (C = 1 or 3):

    Conv 3x3x8 (same pad) - ReLU - MaxPool 2x2
    Conv 3x3x16           - ReLU - MaxPool 2x2
    Conv 3x3x32           - ReLU - MaxPool 2x2
    Flatten (8*8*32=2048) - Dense 2048x64 - ReLU - Dense 64x3

Training math runs in float32; the finite-difference gradient checker
uses float64 on a reduced network.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BadChannelCount,
    BadMagic,
    ShapeMismatch,
    Truncated,
    VersionMismatch,
)
from .prng import SplitMix64

N_CLASSES = 3
INPUT_SIZE = 64

# (layer, conv output channels); dense sizes derive from the pools
LAYER_NAMES = ("conv1", "conv2", "conv3", "fc1", "fc2")


@dataclass(frozen=True)
class Architecture:
    channels: int = 1

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise BadChannelCount(f"channels must be 1 or 3, got {self.channels}")

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        c = self.channels
        return {
            "conv1_w": (3, 3, c, 8),
            "conv1_b": (8,),
            "conv2_w": (3, 3, 8, 16),
            "conv2_b": (16,),
            "conv3_w": (3, 3, 16, 32),
            "conv3_b": (32,),
            "fc1_w": (2048, 64),
            "fc1_b": (64,),
            "fc2_w": (64, N_CLASSES),
            "fc2_b": (N_CLASSES,),
        }


@dataclass
class Model:
    arch: Architecture
    params: dict[str, np.ndarray]
    rng_seed: int = 0

    def copy(self) -> "Model":
        return Model(self.arch, {k: v.copy() for k, v in self.params.items()},
                     self.rng_seed)


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    if name.startswith("conv"):
        return shape[0] * shape[1] * shape[2]
    return shape[0]


def init_model(arch: Architecture, seed: int, dtype=np.float32) -> Model:
    """He-normal weights, zero biases; deterministic per (arch, seed)."""
    rng = SplitMix64(seed)
    params = {}
    for name, shape in arch.param_shapes().items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            std = np.sqrt(2.0 / _fan_in(name, shape))
            draws = rng.gaussians(int(np.prod(shape))) * std
            params[name] = draws.reshape(shape).astype(dtype)
    return Model(arch, params, rng_seed=seed)


# --- layer primitives (H, W, C layout) ---

def _im2col(x: np.ndarray) -> np.ndarray:
    """3x3 same-pad patches, shape (H*W, 9*Cin), (kh, kw, cin) flattening."""
    h, w, cin = x.shape
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(xp, (3, 3), axis=(0, 1))  # (H, W, Cin, 3, 3)
    return np.ascontiguousarray(win.transpose(0, 1, 3, 4, 2)).reshape(h * w, 9 * cin)


def conv_forward(x, w, b):
    h, wd, cin = x.shape
    cout = w.shape[3]
    cols = _im2col(x)
    out = (cols @ w.reshape(9 * cin, cout) + b).reshape(h, wd, cout)
    return out, cols


def conv_backward(dout, x_shape, cols, w):
    h, wd, cin = x_shape
    cout = w.shape[3]
    dmat = dout.reshape(h * wd, cout)
    dw = (cols.T @ dmat).reshape(3, 3, cin, cout)
    db = dmat.sum(axis=0)
    # dx = same-pad convolution of dout with the 180-degree-rotated kernel
    w_rot = np.ascontiguousarray(w[::-1, ::-1].transpose(0, 1, 3, 2))
    dx = (_im2col(dout) @ w_rot.reshape(9 * cout, cin)).reshape(h, wd, cin)
    return dx, dw, db


def pool_forward(x):
    """2x2 max pool; ties go to the first element in row-major block order."""
    h, w, c = x.shape
    blocks = (
        x.reshape(h // 2, 2, w // 2, 2, c)
        .transpose(0, 2, 4, 1, 3)
        .reshape(h // 2, w // 2, c, 4)
    )
    idx = blocks.argmax(axis=3)
    out = np.take_along_axis(blocks, idx[..., None], axis=3)[..., 0]
    return out, idx


def pool_backward(dout, idx, x_shape):
    h, w, c = x_shape
    dblocks = np.zeros((h // 2, w // 2, c, 4), dtype=dout.dtype)
    np.put_along_axis(dblocks, idx[..., None], dout[..., None], axis=3)
    return (
        dblocks.reshape(h // 2, w // 2, c, 2, 2)
        .transpose(0, 3, 1, 4, 2)
        .reshape(h, w, c)
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def loss_and_grad(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Softmax cross-entropy, max-subtraction stabilized."""
    shifted = logits - logits.max()
    log_z = np.log(np.sum(np.exp(shifted)))
    loss = float(log_z - shifted[label])
    dlogits = np.exp(shifted - log_z)
    dlogits[label] -= 1.0
    return loss, dlogits.astype(logits.dtype)


def forward(model: Model, image: np.ndarray) -> tuple[np.ndarray, dict]:
    """Logits plus the activation cache needed by backward."""
    p = model.params
    dtype = p["conv1_w"].dtype
    x = np.asarray(image, dtype=dtype)
    if x.ndim == 2:
        x = x[..., None]
    if x.shape != (INPUT_SIZE, INPUT_SIZE, model.arch.channels):
        raise ShapeMismatch(
            f"expected {(INPUT_SIZE, INPUT_SIZE, model.arch.channels)}, "
            f"got {x.shape}"
        )
    cache = {"x": x}
    a = x
    for i in (1, 2, 3):
        z, cols = conv_forward(a, p[f"conv{i}_w"], p[f"conv{i}_b"])
        r = np.maximum(z, 0)
        pooled, idx = pool_forward(r)
        cache[f"conv{i}"] = (a.shape, cols, z > 0, r.shape, idx)
        a = pooled
    flat = a.reshape(-1)
    h1 = flat @ p["fc1_w"] + p["fc1_b"]
    h1r = np.maximum(h1, 0)
    logits = h1r @ p["fc2_w"] + p["fc2_b"]
    cache["flat"] = flat
    cache["pool3_shape"] = a.shape
    cache["h1_pos"] = h1 > 0
    cache["h1r"] = h1r
    return logits, cache


def backward(model: Model, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Gradient tensors shaped exactly like the parameters."""
    p = model.params
    grads = {}
    grads["fc2_w"] = np.outer(cache["h1r"], dlogits)
    grads["fc2_b"] = dlogits.copy()
    dh1r = p["fc2_w"] @ dlogits
    dh1 = dh1r * cache["h1_pos"]
    grads["fc1_w"] = np.outer(cache["flat"], dh1)
    grads["fc1_b"] = dh1
    da = (p["fc1_w"] @ dh1).reshape(cache["pool3_shape"])
    for i in (3, 2, 1):
        x_shape, cols, relu_pos, r_shape, idx = cache[f"conv{i}"]
        dr = pool_backward(da, idx, r_shape)
        dz = dr * relu_pos
        da, dw, db = conv_backward(dz, x_shape, cols, p[f"conv{i}_w"])
        grads[f"conv{i}_w"] = dw
        grads[f"conv{i}_b"] = db
    return grads


def predict(model: Model, image: np.ndarray) -> np.ndarray:
    """Class probabilities (ambient, extruder_normal, extruder_fault)."""
    logits, _ = forward(model, image)
    return softmax(logits.astype(np.float64))


# --- optimizer ---

@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def adam_init(model: Model) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in model.params.items()},
        v={k: np.zeros_like(v) for k, v in model.params.items()},
    )


def adam_step(model: Model, grads: dict, state: AdamState, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One Adam update with bias correction; mutates model and state."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, p in model.params.items():
        g = grads[name]
        state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * (g * g)
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)


# --- serialization ---

_MAGIC = b"ACFM"
_VERSION = 1


def save_model(model: Model, path) -> None:
    """Binary format: magic, version u32, channels u32, then named tensors."""
    out = bytearray()
    out += _MAGIC
    out += struct.pack("<II", _VERSION, model.arch.channels)
    for name in model.arch.param_shapes():
        tensor = np.ascontiguousarray(model.params[name], dtype="<f4")
        name_bytes = name.encode("ascii")
        out += struct.pack("<H", len(name_bytes)) + name_bytes
        out += struct.pack("<B", tensor.ndim)
        for dim in tensor.shape:
            out += struct.pack("<I", dim)
        out += tensor.tobytes()
    Path(path).write_bytes(bytes(out))


def load_model(path) -> Model:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise BadMagic(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 12:
        raise Truncated(f"{path}: header truncated")
    version, channels = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected {_VERSION}")
    arch = Architecture(channels)
    expected = arch.param_shapes()
    params = {}
    pos = 12
    for _ in range(len(expected)):
        if pos + 2 > len(data):
            raise Truncated(f"{path}: tensor header truncated")
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + name_len].decode("ascii")
        pos += name_len
        if pos + 1 > len(data):
            raise Truncated(f"{path}: tensor rank truncated")
        rank = data[pos]
        pos += 1
        if pos + 4 * rank > len(data):
            raise Truncated(f"{path}: tensor dims truncated")
        shape = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        count = int(np.prod(shape))
        if pos + 4 * count > len(data):
            raise Truncated(f"{path}: tensor payload truncated")
        params[name] = np.frombuffer(
            data, dtype="<f4", count=count, offset=pos
        ).reshape(shape).copy()
        pos += 4 * count
        if name not in expected or tuple(shape) != expected[name]:
            raise ShapeMismatch(f"{path}: unexpected tensor {name} {shape}")
    return Model(arch, params)


# --- gradient checking (reduced net, float64) ---

def _tiny_init(seed: int) -> dict[str, np.ndarray]:
    rng = SplitMix64(seed)
    params = {
        "conv_w": rng.gaussians(18).reshape(3, 3, 1, 2) * np.sqrt(2.0 / 9.0),
        "conv_b": rng.gaussians(2) * 0.1,
        "fc_w": rng.gaussians(96).reshape(32, 3) * np.sqrt(2.0 / 32.0),
        "fc_b": rng.gaussians(3) * 0.1,
    }
    return params


def _tiny_forward(params, x, label):
    z, cols = conv_forward(x, params["conv_w"], params["conv_b"])
    r = np.maximum(z, 0)
    pooled, idx = pool_forward(r)
    flat = pooled.reshape(-1)
    logits = flat @ params["fc_w"] + params["fc_b"]
    loss, dlogits = loss_and_grad(logits, label)
    cache = (x.shape, cols, z > 0, r.shape, idx, pooled.shape, flat)
    return loss, dlogits, cache


def _tiny_backward(params, cache, dlogits):
    x_shape, cols, relu_pos, r_shape, idx, pooled_shape, flat = cache
    grads = {
        "fc_w": np.outer(flat, dlogits),
        "fc_b": dlogits.copy(),
    }
    dflat = params["fc_w"] @ dlogits
    dr = pool_backward(dflat.reshape(pooled_shape), idx, r_shape)
    dz = dr * relu_pos
    _, grads["conv_w"], grads["conv_b"] = conv_backward(
        dz, x_shape, cols, params["conv_w"]
    )
    return grads


def grad_check(seed: int = 1, epsilon: float = 1e-3) -> float:
    """Max relative error of analytic vs central-difference gradients.

    Runs an 8x8x1 -> Conv 3x3x2 -> ReLU -> MaxPool -> Dense->3 network in
    float64 and perturbs every parameter individually.
    """
    rng = SplitMix64(seed)
    params = _tiny_init(rng.next_u64())
    x = rng.gaussians(64).reshape(8, 8, 1)
    label = rng.randint(N_CLASSES)
    _, dlogits, cache = _tiny_forward(params, x, label)
    analytic = _tiny_backward(params, cache, dlogits)
    worst = 0.0
    for name, tensor in params.items():
        flat = tensor.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            loss_hi, _, _ = _tiny_forward(params, x, label)
            flat[i] = orig - epsilon
            loss_lo, _, _ = _tiny_forward(params, x, label)
            flat[i] = orig
            numeric = (loss_hi - loss_lo) / (2.0 * epsilon)
            a = analytic[name].reshape(-1)[i]
            rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            worst = max(worst, rel)
    return worst
