# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass
from enum import Enum

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..constants import LOG_EPSILON, NUM_CLASSES
from ..math import check_divisible_shape
from ..utils import seeded_torch_rng


class DiscInputMode(Enum):
    hard = "hard"
    soft = "soft"
    straight_through = "straight_through"


def _get_hard_one_hot(labels: torch.Tensor) -> torch.Tensor:
    return F.one_hot(labels.argmax(dim=1), num_classes=labels.size(1)).movedim(-1, 1).to(labels.dtype)


def make_disc_input(
    x: torch.Tensor, labels: torch.Tensor, mode: DiscInputMode = DiscInputMode.straight_through
) -> torch.Tensor:
    """voxel-wise product of the CT intensities with every label channel

    Args:
        x (torch.Tensor): normalized CT intensities (B, 1, Z, H, W)
        labels (torch.Tensor): label map or class probabilities (B, C, Z, H, W)
        mode (DiscInputMode, optional): how the labels are turned into the product operand. straight_through
            forwards the hard one-hot value while backpropagating as if soft probabilities were used.
            Defaults to DiscInputMode.straight_through.

    Returns:
        torch.Tensor: D-net input (B, C, Z, H, W)
    """

    assert x.dim() == 5 and x.size(1) == 1, "x should be a (B, 1, Z, H, W) tensor"
    assert labels.dim() == 5, "labels should be a (B, C, Z, H, W) tensor"
    assert x.size(0) == labels.size(0) and x.shape[2:] == labels.shape[2:], "x and labels should have matching shapes"

    with torch.no_grad():
        assert x.min() >= 0 and x.max() <= 1, "CT intensities should be normalized to [0, 1]"

    if mode == DiscInputMode.soft:
        operand = labels
    elif mode == DiscInputMode.hard:
        operand = _get_hard_one_hot(labels.detach())
    elif mode == DiscInputMode.straight_through:
        operand = _get_hard_one_hot(labels.detach()) + (labels - labels.detach())
    else:
        raise ValueError(f"unexpected mode ({mode})")

    return x * operand


@dataclass(frozen=True)
class DiscNetConfig:
    num_classes: int = NUM_CLASSES
    base_channels: int = 8
    num_blocks: int = 4
    normalization: str = "none"
    negative_slope: float = 0.2

    def __post_init__(self) -> None:
        assert self.num_classes >= 2, "num_classes should be >= 2"
        assert self.base_channels >= 1, "base_channels should be >= 1"
        assert self.num_blocks >= 1, "num_blocks should be >= 1"
        assert self.normalization in ["instance", "none"], f"unexpected normalization ({self.normalization})"

    @property
    def spatial_divisor(self) -> int:
        return 2**self.num_blocks

    @staticmethod
    def full_scale() -> "DiscNetConfig":
        return DiscNetConfig(base_channels=64)


class DiscNet(nn.Module):
    """fully convolutional discriminator producing a per-voxel confidence map at input resolution"""

    def __init__(self, config: DiscNetConfig) -> None:
        super().__init__()

        self.config = config

        blocks = []
        in_channels = config.num_classes
        for i in range(config.num_blocks):
            out_channels = config.base_channels * 2**i

            block = [nn.Conv3d(in_channels, out_channels, kernel_size=4, stride=2, padding=1)]
            if config.normalization == "instance":
                block.append(nn.InstanceNorm3d(out_channels, affine=True))
            block.append(nn.LeakyReLU(config.negative_slope))

            blocks.append(nn.Sequential(*block))
            in_channels = out_channels

        self.blocks = nn.ModuleList(blocks)
        self.projection = nn.Conv3d(in_channels, 1, kernel_size=3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        assert x.dim() == 5, "input should be a (B, C, Z, H, W) tensor"
        assert x.size(1) == self.config.num_classes, f"expected {self.config.num_classes} input channels"

        spatial_shape = tuple(x.shape[2:])
        assert check_divisible_shape(
            spatial_shape, self.config.spatial_divisor
        ), f"spatial shape {spatial_shape} should be divisible by {self.config.spatial_divisor}"

        for block in self.blocks:
            x = block(x)

        x = self.projection(x)
        x = F.interpolate(x, size=spatial_shape, mode="trilinear", align_corners=False)
        x = torch.sigmoid(x).clamp(LOG_EPSILON, 1 - LOG_EPSILON)

        return x.squeeze(1)


def build_discnet(config: DiscNetConfig, seed: int = 0) -> DiscNet:
    with seeded_torch_rng(seed):
        return DiscNet(config)
