"""3D U-Net for three-class head segmentation.

Encoder-decoder with skip connections: channel width doubles per level
from a small base, a fixed number of plain conv+ReLU layers per level,
parameter-free nearest-neighbor upsampling in the decoder, and a 1x1x1
head producing per-voxel class probabilities. The network is fully
convolutional, so one set of weights runs at any grid size whose every
dimension is divisible by 2^(levels-1); a UNetSpec's dims fix the
contract grid used for training and inference.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn


@dataclass(frozen=True)
class UNetSpec:
    """Architecture description; every parameter count follows from it."""

    levels: int = 5
    base_channels: int = 8
    convs_per_level: int = 2
    in_dims: tuple = (128, 128, 128)
    in_channels: int = 1
    out_classes: int = 3

    def channel_widths(self):
        """Encoder width per level, doubling from the base."""
        return tuple(self.base_channels << level for level in range(self.levels))


def parameter_count(spec):
    """Exact number of learnable parameters for a spec.

    Every 3x3x3 conv holds 27*cin*cout weights + cout biases, the head
    is a 1x1x1 conv, and upsampling is parameter-free, so the total is a
    pure function of the spec.
    """
    widths = spec.channel_widths()
    total = 0
    cin = spec.in_channels
    for width in widths:
        for _ in range(spec.convs_per_level):
            total += 27 * cin * width + width
            cin = width
    for level in range(spec.levels - 2, -1, -1):
        cin = widths[level + 1] + widths[level]
        for _ in range(spec.convs_per_level):
            total += 27 * cin * widths[level] + widths[level]
            cin = widths[level]
    total += widths[0] * spec.out_classes + spec.out_classes
    return total


def _conv_block(cin, cout, convs):
    layers = []
    for _ in range(convs):
        layers.append(nn.Conv3d(cin, cout, kernel_size=3, padding=1))
        layers.append(nn.ReLU(inplace=True))
        cin = cout
    return nn.Sequential(*layers)


class UNet3d(nn.Module):
    """Maps (N, in_channels, X, Y, Z) to (N, out_classes, X, Y, Z) probabilities."""

    def __init__(self, spec):
        super().__init__()
        self.spec = spec
        widths = spec.channel_widths()
        self.encoders = nn.ModuleList()
        cin = spec.in_channels
        for width in widths:
            self.encoders.append(_conv_block(cin, width, spec.convs_per_level))
            cin = width
        self.decoders = nn.ModuleList()
        for level in range(spec.levels - 2, -1, -1):
            self.decoders.append(
                _conv_block(widths[level + 1] + widths[level], widths[level],
                            spec.convs_per_level)
            )
        self.head = nn.Conv3d(widths[0], spec.out_classes, kernel_size=1)

    def logits(self, x):
        skips = []
        for encoder in self.encoders[:-1]:
            x = encoder(x)
            skips.append(x)
            x = F.max_pool3d(x, kernel_size=2)
        x = self.encoders[-1](x)
        for decoder, skip in zip(self.decoders, reversed(skips)):
            x = F.interpolate(x, size=skip.shape[2:], mode="nearest")
            x = decoder(torch.cat([x, skip], dim=1))
        return self.head(x)

    def forward(self, x):
        return torch.softmax(self.logits(x), dim=1)


def build_model(spec):
    """Construct the network, validating the spec's grid contract."""
    if spec.levels < 1:
        raise ValueError(f"levels must be >= 1, got {spec.levels}")
    if spec.base_channels < 1 or spec.convs_per_level < 1:
        raise ValueError("base_channels and convs_per_level must be >= 1")
    if len(spec.in_dims) != 3 or any(d < 1 for d in spec.in_dims):
        raise ValueError(f"in_dims must be 3 positive extents, got {spec.in_dims}")
    stride = 1 << (spec.levels - 1)
    if any(d % stride for d in spec.in_dims):
        raise ValueError(
            f"dims {spec.in_dims} not divisible by 2^(levels-1) = {stride}"
        )
    return UNet3d(spec)
