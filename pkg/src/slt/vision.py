"""3D ResNet clip encoder and the sentence-to-words-mapping (SWM) conversion.

The ResNet turns one clip into a single feature vector. SWM splits that
vector into ``swm`` contiguous chunks and projects every chunk with one
shared linear layer, giving a fixed-length pseudo-token sequence for the
Transformer encoder regardless of clip duration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    add,
    batch_norm,
    conv3d,
    global_avg_pool3d,
    group_norm,
    linear,
    max_pool3d,
    relu,
    reshape,
)
from .errors import ConfigError, ShapeError
from .nn import Module, kaiming_normal, ones, xavier_uniform, zeros
from .rng import SplitMix64

# depth -> (block type, blocks per stage)
ARCHITECTURES = {
    10: ("basic", (1, 1, 1, 1)),
    34: ("basic", (3, 4, 6, 3)),
    50: ("bottleneck", (3, 4, 6, 3)),
}
_EXPANSION = {"basic": 1, "bottleneck": 4}


@dataclass
class ResNetConfig:
    depth: int = 50
    base_channels: int = 64
    # "group": per-sample statistics; "batch": statistics over the whole batch
    norm: str = "group"
    norm_groups: int = 1

    def __post_init__(self):
        if self.depth not in ARCHITECTURES:
            raise ConfigError(f"unsupported ResNet depth {self.depth}; choose from {sorted(ARCHITECTURES)}")
        if self.base_channels < 1:
            raise ConfigError("base_channels must be positive")
        if self.norm not in ("group", "batch"):
            raise ConfigError(f"unknown norm {self.norm!r}")

    @property
    def block_type(self) -> str:
        return ARCHITECTURES[self.depth][0]

    @property
    def stage_counts(self) -> tuple[int, ...]:
        return ARCHITECTURES[self.depth][1]

    @property
    def feature_size(self) -> int:
        return 8 * self.base_channels * _EXPANSION[self.block_type]


class Conv3d(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel, stride=1, padding=0, *, rng: SplitMix64):
        k = (kernel,) * 3 if isinstance(kernel, int) else tuple(kernel)
        self.stride = stride
        self.padding = padding
        # fan-out mode, as for ReLU networks
        self.weight = kaiming_normal(rng, (out_ch, in_ch) + k, fan=out_ch * int(np.prod(k)))

    def __call__(self, x: Tensor) -> Tensor:
        return conv3d(x, self.weight, self.stride, self.padding)


class ChannelNorm(Module):
    def __init__(self, channels: int, cfg: ResNetConfig):
        self.gain = ones(channels)
        self.bias = zeros(channels)
        self.mode = cfg.norm
        self.groups = cfg.norm_groups if channels % cfg.norm_groups == 0 else 1

    def __call__(self, x: Tensor) -> Tensor:
        if self.mode == "batch":
            return batch_norm(x, self.gain, self.bias)
        return group_norm(x, self.gain, self.bias, self.groups)


class Shortcut(Module):
    """1x1x1 strided projection used when a block changes shape."""

    def __init__(self, in_ch: int, out_ch: int, stride: int, cfg: ResNetConfig, rng: SplitMix64):
        self.conv = Conv3d(in_ch, out_ch, 1, stride, 0, rng=rng)
        self.norm = ChannelNorm(out_ch, cfg)

    def __call__(self, x: Tensor) -> Tensor:
        return self.norm(self.conv(x))


class BasicBlock(Module):
    expansion = 1

    def __init__(self, in_ch: int, planes: int, stride: int, cfg: ResNetConfig, rng: SplitMix64):
        self.conv1 = Conv3d(in_ch, planes, 3, stride, 1, rng=rng)
        self.norm1 = ChannelNorm(planes, cfg)
        self.conv2 = Conv3d(planes, planes, 3, 1, 1, rng=rng)
        self.norm2 = ChannelNorm(planes, cfg)
        self.shortcut = Shortcut(in_ch, planes, stride, cfg, rng) if stride != 1 or in_ch != planes else None

    def __call__(self, x: Tensor) -> Tensor:
        out = relu(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        skip = self.shortcut(x) if self.shortcut is not None else x
        return relu(add(out, skip))


class Bottleneck(Module):
    expansion = 4

    def __init__(self, in_ch: int, planes: int, stride: int, cfg: ResNetConfig, rng: SplitMix64):
        out_ch = planes * self.expansion
        self.conv1 = Conv3d(in_ch, planes, 1, 1, 0, rng=rng)
        self.norm1 = ChannelNorm(planes, cfg)
        self.conv2 = Conv3d(planes, planes, 3, stride, 1, rng=rng)
        self.norm2 = ChannelNorm(planes, cfg)
        self.conv3 = Conv3d(planes, out_ch, 1, 1, 0, rng=rng)
        self.norm3 = ChannelNorm(out_ch, cfg)
        self.shortcut = Shortcut(in_ch, out_ch, stride, cfg, rng) if stride != 1 or in_ch != out_ch else None

    def __call__(self, x: Tensor) -> Tensor:
        out = relu(self.norm1(self.conv1(x)))
        out = relu(self.norm2(self.conv2(out)))
        out = self.norm3(self.conv3(out))
        skip = self.shortcut(x) if self.shortcut is not None else x
        return relu(add(out, skip))


class ResNet3D(Module):
    """Clip (N, 3, D, H, W) -> feature (N, F) by global average pooling.

    Stem: 7x7x7 conv with stride (1, 2, 2), then 3x3x3 max-pool with
    stride 2. Stages 2-4 open with a stride-2 block.
    """

    def __init__(self, cfg: ResNetConfig, rng: SplitMix64, in_channels: int = 3):
        self.cfg = cfg
        self.in_channels = in_channels
        base = cfg.base_channels
        self.stem = Conv3d(in_channels, base, 7, (1, 2, 2), 3, rng=rng)
        self.stem_norm = ChannelNorm(base, cfg)
        block = BasicBlock if cfg.block_type == "basic" else Bottleneck
        blocks = []
        in_ch = base
        for stage, count in enumerate(cfg.stage_counts):
            planes = base * 2**stage
            for i in range(count):
                stride = 2 if stage > 0 and i == 0 else 1
                blocks.append(block(in_ch, planes, stride, cfg, rng))
                in_ch = planes * block.expansion
        self.blocks = blocks
        self.feature_size = in_ch

    def __call__(self, clips: Tensor) -> Tensor:
        if clips.ndim != 5 or clips.shape[1] != self.in_channels:
            raise ShapeError(f"expected clips of shape (N, {self.in_channels}, D, H, W), got {clips.shape}")
        x = relu(self.stem_norm(self.stem(clips)))
        x = max_pool3d(x, 3, 2, 1)
        for block in self.blocks:
            x = block(x)
        return global_avg_pool3d(x)


def resnet3d_forward(clip: Tensor, cfg: ResNetConfig, params: ResNet3D) -> Tensor:
    """Feature vector of length F for one clip (C, D, H, W), or (N, F) for a batch."""
    if clip.ndim == 4:
        return reshape(params(reshape(clip, (1,) + clip.shape)), (cfg.feature_size,))
    return params(clip)


def swm_split(feature: np.ndarray, swm: int) -> np.ndarray:
    """Contiguous chunks of a feature vector, shape (..., swm, F / swm)."""
    f = feature.shape[-1]
    if swm < 1 or f % swm:
        raise ConfigError(f"feature size {f} is not divisible by SWM={swm}")
    return feature.reshape(feature.shape[:-1] + (swm, f // swm))


def swm_convert(feature: Tensor, swm: int, projection: Tensor, bias: Tensor | None = None) -> Tensor:
    """Split (..., F) into ``swm`` chunks and project each to d_model.

    ``projection`` has shape (F / swm, d_model) and is shared by all chunks.
    """
    f = feature.shape[-1]
    if swm < 1 or f % swm:
        raise ConfigError(f"feature size {f} is not divisible by SWM={swm}")
    if projection.shape[0] != f // swm:
        raise ShapeError(f"projection expects chunks of {projection.shape[0]}, SWM gives {f // swm}")
    chunks = reshape(feature, feature.shape[:-1] + (swm, f // swm))
    return linear(chunks, projection, bias)


class SWMProjection(Module):
    def __init__(self, feature_size: int, swm: int, d_model: int, rng: SplitMix64):
        if swm < 1 or feature_size % swm:
            raise ConfigError(f"feature size {feature_size} is not divisible by SWM={swm}")
        self.swm = swm
        chunk = feature_size // swm
        self.weight = xavier_uniform(rng, chunk, d_model)
        self.bias = zeros(d_model)

    def __call__(self, feature: Tensor) -> Tensor:
        return swm_convert(feature, self.swm, self.weight, self.bias)
