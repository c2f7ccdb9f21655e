"""U-Net segmentor: single-channel input, per-pixel class logits."""

from dataclasses import dataclass

import torch
import torch.nn as nn

from ..errors import ConfigError


@dataclass
class SegmentorConfig:
    in_channels: int = 1
    class_count: int = 7
    encoder_channels: tuple = (16, 32, 64, 128, 256)

    def __post_init__(self):
        self.encoder_channels = tuple(int(c) for c in self.encoder_channels)
        if len(self.encoder_channels) < 2:
            raise ConfigError("encoder_channels needs at least 2 stages")
        if any(a >= b for a, b in zip(self.encoder_channels, self.encoder_channels[1:])):
            raise ConfigError(f"encoder_channels must be strictly increasing, got {self.encoder_channels}")
        if self.class_count < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count}")

    @property
    def divisor(self):
        # one pooling stage between consecutive encoder levels
        return 2 ** (len(self.encoder_channels) - 1)


class ConvBlock(nn.Module):
    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class UNetSegmentor(nn.Module):
    def __init__(self, config: SegmentorConfig):
        super().__init__()
        self.config = config
        chans = config.encoder_channels
        self.encoders = nn.ModuleList()
        prev = config.in_channels
        for c in chans:
            self.encoders.append(ConvBlock(prev, c))
            prev = c
        self.pool = nn.MaxPool2d(2)
        self.upsamplers = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for c in reversed(chans[:-1]):
            self.upsamplers.append(nn.ConvTranspose2d(prev, c, 2, stride=2))
            self.decoders.append(ConvBlock(2 * c, c))
            prev = c
        self.head = nn.Conv2d(prev, config.class_count, 1)
        self.apply(_init_kaiming)

    def forward(self, x):
        _check_input(x, self.config.in_channels, self.config.divisor)
        skips = []
        for i, enc in enumerate(self.encoders):
            x = enc(x)
            if i < len(self.encoders) - 1:
                skips.append(x)
                x = self.pool(x)
        for up, dec, skip in zip(self.upsamplers, self.decoders, reversed(skips)):
            x = up(x)
            x = dec(torch.cat([skip, x], dim=1))
        return self.head(x)


def _check_input(x, in_channels, divisor):
    if x.dim() != 4 or x.shape[1] != in_channels:
        raise ConfigError(
            f"expected Bx{in_channels}xHxW input, got shape {tuple(x.shape)}"
        )
    h, w = x.shape[2], x.shape[3]
    if h % divisor or w % divisor:
        raise ConfigError(
            f"input spatial size {h}x{w} must be divisible by {divisor}"
        )


def _init_kaiming(module):
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
        nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def segmentor_forward(segmentor, images):
    return segmentor(images)
