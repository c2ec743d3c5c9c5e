"""U-Net-like generator with 1x1-conv skip branches and an offset output layer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import nn
from ..nn import BatchNorm, Conv2d, Module, PReLU, Tensor


@dataclass(frozen=True)
class MinSubtract:
    """Shift the output so its minimum is zero (simulated, nonnegative data)."""


@dataclass(frozen=True)
class CornerMeanSubtract:
    """Shift the output so the mean of its top-left window is zero (real data background)."""

    window_h: int = 30
    window_w: int = 30

    def __post_init__(self):
        if self.window_h < 1 or self.window_w < 1:
            raise ValueError("corner window must be at least 1x1")


@dataclass(frozen=True)
class GeneratorConfig:
    input_channels: int = 32
    stages: int = 3
    body_channels: int = 128
    skip_channels: int = 4
    offset_mode: MinSubtract | CornerMeanSubtract = field(default_factory=MinSubtract)

    def __post_init__(self):
        for name in ("input_channels", "stages", "body_channels", "skip_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not isinstance(self.offset_mode, (MinSubtract, CornerMeanSubtract)):
            raise TypeError(f"unknown offset mode {self.offset_mode!r}")

    def padded_shape(self, height: int, width: int) -> tuple[int, int]:
        m = 2**self.stages
        return -(-height // m) * m, -(-width // m) * m


def sample_input(seed: int, input_channels: int, height: int, width: int) -> Tensor:
    """Fixed network input z, i.i.d. U(0, 0.1)."""
    if min(input_channels, height, width) < 1:
        raise ValueError("input dimensions must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    return Tensor(rng.uniform(0.0, 0.1, (input_channels, height, width)))


class _DownBlock(Module):
    def __init__(self, in_ch, ch, rng):
        self.conv1 = Conv2d(in_ch, ch, 3, stride=2, rng=rng)
        self.bn1 = BatchNorm(ch)
        self.act1 = PReLU(ch)
        self.conv2 = Conv2d(ch, ch, 3, stride=1, rng=rng)
        self.bn2 = BatchNorm(ch)
        self.act2 = PReLU(ch)

    def forward(self, x):
        x = self.act1(self.bn1(self.conv1(x)))
        return self.act2(self.bn2(self.conv2(x)))


class _UpBlock(Module):
    def __init__(self, ch, skip_ch, rng):
        self.bn_up = BatchNorm(ch)
        self.conv1 = Conv2d(ch + skip_ch, ch, 3, rng=rng)
        self.bn1 = BatchNorm(ch)
        self.act1 = PReLU(ch)
        self.conv2 = Conv2d(ch, ch, 3, rng=rng)
        self.bn2 = BatchNorm(ch)
        self.act2 = PReLU(ch)

    def forward(self, x, skip):
        x = self.bn_up(nn.upsample_bilinear_2x(x))
        x = nn.concat_channels(x, skip)
        x = self.act1(self.bn1(self.conv1(x)))
        return self.act2(self.bn2(self.conv2(x)))


class Generator(Module):
    def __init__(self, cfg: GeneratorConfig, height: int, width: int, seed: int = 0):
        if height < 1 or width < 1:
            raise ValueError("image dimensions must be positive")
        self.cfg = cfg
        self.height, self.width = height, width
        self.padded = cfg.padded_shape(height, width)
        if isinstance(cfg.offset_mode, CornerMeanSubtract):
            if cfg.offset_mode.window_h > height or cfg.offset_mode.window_w > width:
                raise ValueError("offset window larger than the image")
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        body, skip = cfg.body_channels, cfg.skip_channels
        in_chs = [cfg.input_channels] + [body] * (cfg.stages - 1)
        self.skips = [Conv2d(c, skip, 1, rng=rng) for c in in_chs]
        self.downs = [_DownBlock(c, body, rng) for c in in_chs]
        self.ups = [_UpBlock(body, skip, rng) for _ in range(cfg.stages)]
        self.head = Conv2d(body, 1, 1, rng=rng)

    def raw(self, z: Tensor) -> Tensor:
        """Network output before cropping and offset removal, shape (1, Hp, Wp)."""
        if z.shape[1:] != self.padded:
            raise ValueError(f"input spatial shape {z.shape[1:]} != padded canvas {self.padded}")
        skips = []
        x = z
        for skip, down in zip(self.skips, self.downs):
            skips.append(skip(x))
            x = down(x)
        for up, s in zip(reversed(self.ups), reversed(skips)):
            x = up(x, s)
        return self.head(x)

    def forward(self, z: Tensor) -> Tensor:
        out = self.raw(z)
        if self.padded != (self.height, self.width):
            out = out[:, : self.height, : self.width]
        mode = self.cfg.offset_mode
        if isinstance(mode, MinSubtract):
            return out - nn.tmin(out)
        return out - nn.mean(out[:, : mode.window_h, : mode.window_w])


def build_generator(cfg: GeneratorConfig, height: int, width: int, seed: int = 0) -> Generator:
    return Generator(cfg, height, width, seed)
