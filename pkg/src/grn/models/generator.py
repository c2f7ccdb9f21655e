"""Image-to-image generator: residual downsampling encoder, transposed-conv decoder,
tanh-bounded output. No encoder-decoder skips by default (flag available)."""

from dataclasses import dataclass

import torch
import torch.nn as nn

from ..errors import ConfigError


@dataclass
class GeneratorConfig:
    base_channels: int = 32
    downsample_stages: int = 3
    residual_blocks_per_stage: int = 2
    skip_connections: bool = False

    def __post_init__(self):
        if self.downsample_stages < 1:
            raise ConfigError(f"downsample_stages must be >= 1, got {self.downsample_stages}")
        if self.base_channels < 1 or self.residual_blocks_per_stage < 0:
            raise ConfigError("base_channels must be >= 1 and residual_blocks_per_stage >= 0")

    @property
    def divisor(self):
        return 2 ** self.downsample_stages


class ResidualBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.block(x)


class ResidualGenerator(nn.Module):
    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        # channel widths c_0 (after stem) .. c_K (bottleneck)
        chans = [config.base_channels * 2 ** k for k in range(config.downsample_stages + 1)]
        self.stem = nn.Sequential(
            nn.Conv2d(1, chans[0], 7, padding=3),
            nn.InstanceNorm2d(chans[0]),
            nn.ReLU(inplace=True),
        )
        self.down_stages = nn.ModuleList()
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            stage = [
                nn.Conv2d(c_in, c_out, 3, stride=2, padding=1),
                nn.InstanceNorm2d(c_out),
                nn.ReLU(inplace=True),
            ]
            stage += [ResidualBlock(c_out) for _ in range(config.residual_blocks_per_stage)]
            self.down_stages.append(nn.Sequential(*stage))
        self.up_stages = nn.ModuleList()
        prev = chans[-1]
        for c in reversed(chans[:-1]):
            self.up_stages.append(nn.Sequential(
                nn.ConvTranspose2d(prev, c, 3, stride=2, padding=1, output_padding=1),
                nn.InstanceNorm2d(c),
                nn.ReLU(inplace=True),
            ))
            prev = 2 * c if config.skip_connections else c
        self.head = nn.Sequential(nn.Conv2d(prev, 1, 7, padding=3), nn.Tanh())
        self.apply(_init_gaussian)

    def forward(self, x):
        if x.dim() != 4 or x.shape[1] != 1:
            raise ConfigError(f"expected Bx1xHxW input, got shape {tuple(x.shape)}")
        h, w = x.shape[2], x.shape[3]
        if h % self.config.divisor or w % self.config.divisor:
            raise ConfigError(
                f"input spatial size {h}x{w} must be divisible by {self.config.divisor}"
            )
        x = self.stem(x)
        feats = [x]
        for stage in self.down_stages:
            x = stage(x)
            feats.append(x)
        for i, up in enumerate(self.up_stages):
            x = up(x)
            if self.config.skip_connections:
                x = torch.cat([x, feats[-(i + 2)]], dim=1)
        return self.head(x)


class IdentityGenerator(nn.Module):
    """Parameterless stand-in used when training touches only the segmentor."""

    def forward(self, x):
        return x


def _init_gaussian(module):
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def generator_forward(generator, images):
    return generator(images)
