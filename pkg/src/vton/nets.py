"""Seeded toy-scale network blocks with deterministic initialization.

Every parameter is a pure function of (seed, label, shape): weights come
from a Philox counter-based stream keyed by blake2b(seed|label), drawn
as float32 uniform(-a, a) with a = sqrt(1/fan_in). Construction order
does not matter and equal seeds rebuild bitwise-equal networks on any
platform. Forward passes are pure; nothing here trains.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError, ShapeMismatchError

__all__ = [
    "relu",
    "sigmoid",
    "softmax_channels",
    "uniform_init",
    "Conv2D",
    "SEBlock",
    "ConvGRUCell",
    "EncoderDecoder",
    "FeatureExtractor",
]

DOWNSAMPLE_FACTOR = 32  # 2**5, the encoder's total stride


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_channels(x: np.ndarray) -> np.ndarray:
    """Per-pixel softmax over the channel axis of a (C, H, W) array."""
    z = x - x.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def _param_rng(seed: int, label: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{seed}|{label}".encode(), digest_size=16).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))


def uniform_init(seed: int, label: str, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """float32 uniform(-a, a) with a = sqrt(1/fan_in), reproducible by label."""
    bound = np.float32(np.sqrt(1.0 / fan_in))
    r = _param_rng(seed, label).random(shape, dtype=np.float32)
    return (r * np.float32(2.0) - np.float32(1.0)) * bound


class Conv2D:
    """3x3 convolution, zero padding 1, stride 1 or 2."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int = 1,
        seed: int = 0,
        label: str = "conv",
        zero_bias: bool = False,
    ):
        if stride not in (1, 2):
            raise ParameterError(f"stride must be 1 or 2, got {stride}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        fan_in = in_channels * 9
        self.weight = uniform_init(
            seed, label + ".weight", (out_channels, in_channels, 3, 3), fan_in
        )
        if zero_bias:
            self.bias = np.zeros(out_channels, dtype=np.float32)
        else:
            self.bias = uniform_init(seed, label + ".bias", (out_channels,), fan_in)

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 3 or x.shape[0] != self.in_channels:
            raise ShapeMismatchError(
                f"expected ({self.in_channels}, H, W) input, got shape {x.shape}"
            )
        padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
        windows = sliding_window_view(padded, (3, 3), axis=(1, 2))
        windows = windows[:, :: self.stride, :: self.stride]
        out = np.tensordot(
            self.weight.astype(np.float64), windows, axes=([1, 2, 3], [0, 3, 4])
        )
        return out + self.bias.astype(np.float64)[:, None, None]

    def backward_input(self, grad_out: np.ndarray, in_height: int, in_width: int) -> np.ndarray:
        """Gradient of forward() w.r.t. its input (parameters held fixed)."""
        grad_out = np.asarray(grad_out, dtype=np.float64)
        _, oh, ow = grad_out.shape
        s = self.stride
        acc = np.zeros((self.in_channels, in_height + 2, in_width + 2), dtype=np.float64)
        w64 = self.weight.astype(np.float64)
        for ki in range(3):
            for kj in range(3):
                tap = np.tensordot(w64[:, :, ki, kj], grad_out, axes=([0], [0]))
                acc[:, ki : ki + s * oh : s, kj : kj + s * ow : s] += tap
        return acc[:, 1 : in_height + 1, 1 : in_width + 1]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}


class SEBlock:
    """Squeeze-and-excitation channel gate with reduction ratio r."""

    def __init__(self, channels: int, reduction: int = 4, seed: int = 0, label: str = "se"):
        if channels < 1:
            raise ParameterError("channel count must be positive")
        mid = max(1, channels // reduction)
        self.channels = channels
        self.w_squeeze = uniform_init(seed, label + ".w1", (mid, channels), channels)
        self.b_squeeze = uniform_init(seed, label + ".b1", (mid,), channels)
        self.w_excite = uniform_init(seed, label + ".w2", (channels, mid), mid)
        self.b_excite = uniform_init(seed, label + ".b2", (channels,), mid)

    @classmethod
    def passthrough(cls, channels: int) -> "SEBlock":
        """A block whose gates saturate to 1.0 in float64 (output == input)."""
        block = cls(channels, seed=0, label="se.passthrough")
        block.w_squeeze = np.zeros_like(block.w_squeeze)
        block.b_squeeze = np.zeros_like(block.b_squeeze)
        block.w_excite = np.zeros_like(block.w_excite)
        block.b_excite = np.full_like(block.b_excite, 40.0)
        return block

    def gates(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 3 or x.shape[0] != self.channels:
            raise ShapeMismatchError(
                f"expected ({self.channels}, H, W) input, got shape {x.shape}"
            )
        pooled = x.mean(axis=(1, 2))
        hidden = relu(self.w_squeeze.astype(np.float64) @ pooled + self.b_squeeze)
        return sigmoid(self.w_excite.astype(np.float64) @ hidden + self.b_excite)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) * self.gates(x)[:, None, None]

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "w_squeeze": self.w_squeeze,
            "b_squeeze": self.b_squeeze,
            "w_excite": self.w_excite,
            "b_excite": self.b_excite,
        }


class ConvGRUCell:
    """Convolutional GRU over 2-channel (flow-shaped) states.

    Gates are single 3x3 convolutions on the channel-concatenated pair:
    z = sigmoid(Wz * [h, x]), r = sigmoid(Wr * [h, x]),
    c = act(Wc * [r . h, x]), h' = (1 - z) . h + z . c.

    Gate biases initialize to zero so a zero state fed zero input stays
    exactly zero; that makes "no predicted displacement" aggregate to the
    identity warp.
    """

    def __init__(
        self,
        channels: int = 2,
        seed: int = 0,
        label: str = "gru",
        candidate_activation: str = "tanh",
    ):
        if candidate_activation not in ("tanh", "identity"):
            raise ParameterError(f"unknown candidate activation {candidate_activation!r}")
        self.channels = channels
        self.candidate_activation = candidate_activation
        self.conv_update = Conv2D(2 * channels, channels, seed=seed, label=label + ".z", zero_bias=True)
        self.conv_reset = Conv2D(2 * channels, channels, seed=seed, label=label + ".r", zero_bias=True)
        self.conv_cand = Conv2D(2 * channels, channels, seed=seed, label=label + ".c", zero_bias=True)

    @classmethod
    def always_update(cls, channels: int = 2) -> "ConvGRUCell":
        """Forced z = 1 with an identity candidate path: step(h, x) = x."""
        cell = cls(channels, candidate_activation="identity")
        for conv in (cell.conv_update, cell.conv_reset, cell.conv_cand):
            conv.weight = np.zeros_like(conv.weight)
        cell.conv_update.bias = np.full_like(cell.conv_update.bias, 30.0)
        # candidate's center tap copies the input half of [r.h, x]
        for c in range(channels):
            cell.conv_cand.weight[c, channels + c, 1, 1] = 1.0
        return cell

    @classmethod
    def never_update(cls, channels: int = 2) -> "ConvGRUCell":
        """Forced z = 0: step(h, x) = h up to sigmoid saturation error."""
        cell = cls(channels)
        cell.conv_update.weight = np.zeros_like(cell.conv_update.weight)
        cell.conv_update.bias = np.full_like(cell.conv_update.bias, -30.0)
        return cell

    def step(self, state: np.ndarray, x: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if state.shape != x.shape:
            raise ShapeMismatchError(f"state {state.shape} vs input {x.shape}")
        if state.shape[0] != self.channels:
            raise ShapeMismatchError(
                f"expected {self.channels}-channel state, got {state.shape[0]}"
            )
        pair = np.concatenate([state, x], axis=0)
        z = sigmoid(self.conv_update.forward(pair))
        r = sigmoid(self.conv_reset.forward(pair))
        cand = self.conv_cand.forward(np.concatenate([r * state, x], axis=0))
        if self.candidate_activation == "tanh":
            cand = np.tanh(cand)
        return (1.0 - z) * state + z * cand

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for name, conv in (("z", self.conv_update), ("r", self.conv_reset), ("c", self.conv_cand)):
            for key, value in conv.parameters().items():
                out[f"{name}.{key}"] = value
        return out


def _upsample2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


class _EncoderStage:
    def __init__(self, in_ch, out_ch, seed, label, use_se, se_reduction):
        self.down = Conv2D(in_ch, out_ch, stride=2, seed=seed, label=label + ".down")
        self.res_a = Conv2D(out_ch, out_ch, seed=seed, label=label + ".res_a")
        self.res_b = Conv2D(out_ch, out_ch, seed=seed, label=label + ".res_b")
        self.se = SEBlock(out_ch, se_reduction, seed=seed, label=label + ".se") if use_se else None

    def forward(self, x):
        x = relu(self.down.forward(x))
        residual = self.res_b.forward(relu(self.res_a.forward(x)))
        x = relu(x + residual)
        if self.se is not None:
            x = self.se.forward(x)
        return x


class EncoderDecoder:
    """Depth-5 residual encoder and 5-layer decoder with skip connections.

    Spatial size is preserved end to end; input H and W must be
    divisible by 32 (the caller pads and crops otherwise). Decoder
    intermediates are exposed for multi-scale prediction heads.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        base_width: int = 8,
        seed: int = 0,
        use_se: bool = False,
        se_reduction: int = 4,
        label: str = "encdec",
    ):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.base_width = base_width
        widths = [base_width, base_width * 2, base_width * 4, base_width * 8, base_width * 8]
        self.encoder_widths = widths
        self.decoder_widths = widths[::-1][1:] + [base_width]  # e.g. [64, 32, 16, 8, 8]

        self.stages = []
        prev = in_channels
        for i, w in enumerate(widths):
            self.stages.append(
                _EncoderStage(prev, w, seed, f"{label}.enc{i}", use_se, se_reduction)
            )
            prev = w

        self.decoder = []
        prev = widths[-1]
        for k, w in enumerate(self.decoder_widths):
            skip_ch = widths[3 - k] if k < 4 else 0
            self.decoder.append(
                Conv2D(prev + skip_ch, w, seed=seed, label=f"{label}.dec{k}")
            )
            prev = w
        self.head = Conv2D(prev, out_channels, seed=seed, label=f"{label}.head")

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 3 or x.shape[0] != self.in_channels:
            raise ShapeMismatchError(
                f"expected ({self.in_channels}, H, W) input, got shape {x.shape}"
            )
        _, h, w = x.shape
        if h % DOWNSAMPLE_FACTOR or w % DOWNSAMPLE_FACTOR:
            ph = -(-h // DOWNSAMPLE_FACTOR) * DOWNSAMPLE_FACTOR
            pw = -(-w // DOWNSAMPLE_FACTOR) * DOWNSAMPLE_FACTOR
            raise ShapeMismatchError(
                f"input {h}x{w} is not divisible by {DOWNSAMPLE_FACTOR}; pad to {ph}x{pw}"
            )
        return x

    def forward_features(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output map, decoder intermediates coarse to fine)."""
        x = self._check_input(x)
        skips = []
        h = x
        for stage in self.stages:
            h = stage.forward(h)
            skips.append(h)
        feats = []
        h = skips[-1]
        for k, conv in enumerate(self.decoder):
            h = _upsample2(h)
            if k < 4:
                h = np.concatenate([h, skips[3 - k]], axis=0)
            h = relu(conv.forward(h))
            feats.append(h)
        return self.head.forward(h), feats

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_features(x)[0]

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for i, stage in enumerate(self.stages):
            for sub, layer in (("down", stage.down), ("res_a", stage.res_a), ("res_b", stage.res_b)):
                for key, value in layer.parameters().items():
                    out[f"enc{i}.{sub}.{key}"] = value
            if stage.se is not None:
                for key, value in stage.se.parameters().items():
                    out[f"enc{i}.se.{key}"] = value
        for k, conv in enumerate(self.decoder):
            for key, value in conv.parameters().items():
                out[f"dec{k}.{key}"] = value
        for key, value in self.head.parameters().items():
            out[f"head.{key}"] = value
        return out


class FeatureExtractor:
    """Fixed seeded stand-in for a pretrained perceptual network.

    Five ReLU conv levels at strides 1, 2, 4, 8, 16 of the input; never
    trained, bitwise deterministic for a given seed. `input_gradient`
    backpropagates level cotangents to the 3-channel input, which is all
    the perceptual losses need.
    """

    CHANNELS = (8, 16, 32, 32, 32)

    def __init__(self, seed: int = 0, label: str = "percep"):
        self.layers = []
        prev = 3
        for i, ch in enumerate(self.CHANNELS):
            stride = 1 if i == 0 else 2
            self.layers.append(
                Conv2D(prev, ch, stride=stride, seed=seed, label=f"{label}.conv{i}")
            )
            prev = ch

    def features(self, x: np.ndarray) -> list[np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[0] != 3:
            raise ShapeMismatchError(f"expected (3, H, W) input, got shape {x.shape}")
        levels = []
        h = x
        for conv in self.layers:
            h = relu(conv.forward(h))
            levels.append(h)
        return levels

    def input_gradient(self, x: np.ndarray, level_grads: list[np.ndarray]) -> np.ndarray:
        """VJP: maps per-level cotangents back to the input image."""
        x = np.asarray(x, dtype=np.float64)
        if len(level_grads) != len(self.layers):
            raise ShapeMismatchError(
                f"expected {len(self.layers)} level gradients, got {len(level_grads)}"
            )
        inputs = []
        pre_acts = []
        h = x
        for conv in self.layers:
            inputs.append(h)
            pre = conv.forward(h)
            pre_acts.append(pre)
            h = relu(pre)
        grad = np.zeros_like(pre_acts[-1])
        for i in range(len(self.layers) - 1, -1, -1):
            grad = grad + np.asarray(level_grads[i], dtype=np.float64)
            grad = grad * (pre_acts[i] > 0)
            grad = self.layers[i].backward_input(
                grad, inputs[i].shape[1], inputs[i].shape[2]
            )
        return grad
