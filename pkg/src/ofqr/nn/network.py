"""Encoder-decoder reconstruction network with explicit reverse-mode gradients.

Layout (defaults shown, input 1xHxW)::

    stem    conv 1->8                          @ H      (skip 0)
    enc i   conv stride 2 -> c_i, conv c_i->c_i @ H/2^(i+1)  (skip i+1, last = bottleneck)
    dec i   upsample x2, concat skip, conv -> c  (mirrors the encoder)
    head    conv ->1, sigmoid

with ``encoder_channels = (16, 32, 64)``. ``architecture="linear"`` is a
single 3x3 convolution with no activation, used for gradient checks.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from ofqr.errors import ShapeMismatch, StaleCache
from ofqr.nn import layers

_versions = itertools.count(1)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    cin: int
    cout: int
    stride: int = 1


@dataclass(frozen=True)
class NetworkConfig:
    height: int = 64
    width: int = 64
    encoder_channels: tuple[int, ...] = (16, 32, 64)
    stem_channels: int = 8
    encoder_convs: int = 1
    decoder_convs: int = 1
    kernel: int = 3
    leaky_slope: float = 0.1
    architecture: str = "unet"

    def __post_init__(self):
        object.__setattr__(self, "encoder_channels", tuple(int(c) for c in self.encoder_channels))
        if self.architecture not in ("unet", "linear"):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.architecture == "unet":
            if not self.encoder_channels:
                raise ValueError("encoder_channels must be non-empty")
            f = 2 ** len(self.encoder_channels)
            if self.height % f or self.width % f:
                raise ValueError(f"input {self.height}x{self.width} not divisible by {f}")
        if self.kernel % 2 != 1:
            raise ValueError("kernel size must be odd")

    @property
    def levels(self) -> int:
        return len(self.encoder_channels)

    def layer_plan(self) -> list[LayerSpec]:
        if self.architecture == "linear":
            return [LayerSpec("conv", 1, 1)]
        plan = [LayerSpec("stem", 1, self.stem_channels)]
        widths = [self.stem_channels, *self.encoder_channels]
        for i, c in enumerate(self.encoder_channels):
            plan.append(LayerSpec(f"enc{i}.down", widths[i], c, 2))
            for j in range(self.encoder_convs):
                plan.append(LayerSpec(f"enc{i}.conv{j}", c, c))
        prev = self.encoder_channels[-1]
        for i in reversed(range(self.levels)):
            out = widths[i]
            plan.append(LayerSpec(f"dec{i}.fuse", prev + widths[i], out))
            for j in range(self.decoder_convs - 1):
                plan.append(LayerSpec(f"dec{i}.conv{j}", out, out))
            prev = out
        plan.append(LayerSpec("head", prev, 1))
        return plan

    def to_json(self) -> dict:
        d = asdict(self)
        d["encoder_channels"] = list(self.encoder_channels)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "NetworkConfig":
        return cls(**d)


@dataclass
class NetworkParams:
    """Weights ``(cout, cin, k, k)`` and biases ``(cout,)`` per named layer."""

    weights: dict[str, np.ndarray]
    biases: dict[str, np.ndarray]
    version: int = field(default_factory=lambda: next(_versions))

    def names(self) -> list[str]:
        return list(self.weights)

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for name in self.weights:
            out.append((f"{name}.w", self.weights[name]))
            out.append((f"{name}.b", self.biases[name]))
        return out

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            {k: v.copy() for k, v in self.weights.items()},
            {k: v.copy() for k, v in self.biases.items()},
        )

    def touch(self) -> None:
        """Mark in-place edits so caches from earlier forwards become stale."""
        self.version = next(_versions)


def init_params(config: NetworkConfig, seed: int) -> NetworkParams:
    """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
    from ofqr.rng import numpy_rng

    rng = numpy_rng(seed, 0, "init")
    k = config.kernel
    weights, biases = {}, {}
    for spec in config.layer_plan():
        fan_in = spec.cin * k * k
        weights[spec.name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), (spec.cout, spec.cin, k, k))
        biases[spec.name] = np.zeros(spec.cout)
    return NetworkParams(weights, biases)


@dataclass
class ForwardCache:
    version: int
    params_id: int
    tape: list
    input_shape: tuple


def _conv(params, name, x, stride, tape):
    y, c = layers.conv2d_forward(x, params.weights[name], params.biases[name], stride)
    tape.append(("conv", name, c))
    return y


def _act(x, slope, tape):
    y, c = layers.leaky_relu_forward(x, slope)
    tape.append(("lrelu", None, c))
    return y


def forward(params: NetworkParams, config: NetworkConfig, batch: np.ndarray):
    """Run the network on a ``(B, 1, H, W)`` batch; returns ``(output, cache)``."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] != 1:
        raise ShapeMismatch(f"expected (B, 1, H, W), got {x.shape}")
    if config.architecture == "unet" and x.shape[2:] != (config.height, config.width):
        raise ShapeMismatch(f"expected spatial {config.height}x{config.width}, got {x.shape[2:]}")
    tape: list = []
    if config.architecture == "linear":
        y = _conv(params, "conv", x, 1, tape)
        return y, ForwardCache(params.version, id(params), tape, x.shape)

    slope = config.leaky_slope
    h = _act(_conv(params, "stem", x, 1, tape), slope, tape)
    skips = [h]
    for i in range(config.levels):
        h = _act(_conv(params, f"enc{i}.down", h, 2, tape), slope, tape)
        for j in range(config.encoder_convs):
            h = _act(_conv(params, f"enc{i}.conv{j}", h, 1, tape), slope, tape)
        skips.append(h)
    for i in reversed(range(config.levels)):
        h, c = layers.upsample2_forward(h)
        tape.append(("up", None, c))
        h, c = layers.concat_forward(h, skips[i])
        tape.append(("cat", i, c))
        h = _act(_conv(params, f"dec{i}.fuse", h, 1, tape), slope, tape)
        for j in range(config.decoder_convs - 1):
            h = _act(_conv(params, f"dec{i}.conv{j}", h, 1, tape), slope, tape)
    h = _conv(params, "head", h, 1, tape)
    y, c = layers.sigmoid_forward(h)
    tape.append(("sigmoid", None, c))
    return y, ForwardCache(params.version, id(params), tape, x.shape)


def backward(params: NetworkParams, config: NetworkConfig, cache: ForwardCache,
             output_grad: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients keyed ``"<layer>.w"`` / ``"<layer>.b"``."""
    if cache.version != params.version or cache.params_id != id(params):
        raise StaleCache("parameters changed since the forward pass")
    grads: dict[str, np.ndarray] = {}
    g = np.asarray(output_grad, dtype=np.float64)
    # gradients arriving at skip tensors, added when the walk reaches them
    pending: dict[int, np.ndarray] = {}
    skip_points = _skip_positions(cache.tape, config)
    for pos in range(len(cache.tape) - 1, -1, -1):
        kind, name, c = cache.tape[pos]
        if pos in skip_points:
            # this op produced a skip tensor: its gradient also flows from the concat
            g = g + pending.pop(skip_points[pos])
        if kind == "conv":
            g, dw, db = layers.conv2d_backward(g, c, params.weights[name])
            grads[f"{name}.w"] = dw
            grads[f"{name}.b"] = db
        elif kind == "lrelu":
            g = layers.leaky_relu_backward(g, c)
        elif kind == "sigmoid":
            g = layers.sigmoid_backward(g, c)
        elif kind == "up":
            g = layers.upsample2_backward(g)
        elif kind == "cat":
            g, gskip = layers.concat_backward(g, c)
            pending[name] = gskip
    return grads


def _skip_positions(tape, config) -> dict[int, int]:
    """Tape index (the op producing each skip tensor) -> skip level."""
    if config.architecture != "unet":
        return {}
    positions = {}
    level = 0
    pos = 1  # stem conv, then its activation
    positions[pos] = level
    per_level = 2 * (1 + config.encoder_convs)
    for i in range(config.levels - 1):
        pos += per_level
        positions[pos] = i + 1
    return positions


def predict(params: NetworkParams, config: NetworkConfig, frames: np.ndarray, chunk: int = 16) -> np.ndarray:
    """Outputs for ``(N, H, W)`` frames as ``(N, H, W)``, in fixed-size chunks."""
    frames = np.asarray(frames, dtype=np.float64)
    out = np.empty_like(frames)
    for i in range(0, frames.shape[0], chunk):
        y, _ = forward(params, config, frames[i : i + chunk, None])
        out[i : i + chunk] = y[:, 0]
    return out
