"""Patch-level discriminator: stacked 4x4 convolutions emitting a spatial grid of
real/fake scores (one per receptive-field patch)."""

from dataclasses import dataclass

import torch.nn as nn

from ..errors import ConfigError


@dataclass
class DiscriminatorConfig:
    layer_channels: tuple = (64, 128, 256, 512)

    def __post_init__(self):
        self.layer_channels = tuple(int(c) for c in self.layer_channels)
        if len(self.layer_channels) < 2:
            raise ConfigError("discriminator needs at least 2 layers")
        if any(c < 1 for c in self.layer_channels):
            raise ConfigError(f"layer_channels must be positive, got {self.layer_channels}")

    def strides(self):
        # stride 2 everywhere except the last feature layer and the score head
        return [2] * (len(self.layer_channels) - 1) + [1]

    def min_input_size(self):
        """Smallest input side for which every layer output stays >= 1 pixel."""
        n = 1
        while _output_size(n, self.strides()) < 1:
            n += 1
        return n

    def output_size(self, n):
        return _output_size(n, self.strides())


def _output_size(n, strides):
    for s in strides:
        n = (n + 2 - 4) // s + 1  # kernel 4, padding 1
        if n < 1:
            return 0
    return n - 1  # final score conv: kernel 4, stride 1, padding 1


class PatchDiscriminator(nn.Module):
    def __init__(self, config: DiscriminatorConfig):
        super().__init__()
        self.config = config
        layers = []
        prev = 1
        for i, (c, s) in enumerate(zip(config.layer_channels, config.strides())):
            layers.append(nn.Conv2d(prev, c, 4, stride=s, padding=1))
            if i > 0:  # first layer has no normalization (pix2pix convention)
                layers.append(nn.InstanceNorm2d(c))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            prev = c
        layers.append(nn.Conv2d(prev, 1, 4, stride=1, padding=1))
        self.net = nn.Sequential(*layers)
        self.apply(_init_gaussian)

    def forward(self, x):
        if x.dim() != 4 or x.shape[1] != 1:
            raise ConfigError(f"expected Bx1xHxW input, got shape {tuple(x.shape)}")
        h, w = x.shape[2], x.shape[3]
        min_size = self.config.min_input_size()
        if h < min_size or w < min_size:
            raise ConfigError(
                f"input {h}x{w} is below the discriminator's minimum spatial size "
                f"{min_size}x{min_size} for layer_channels {self.config.layer_channels}"
            )
        return self.net(x)


def _init_gaussian(module):
    if isinstance(module, nn.Conv2d):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def discriminator_forward(discriminator, images):
    return discriminator(images)
