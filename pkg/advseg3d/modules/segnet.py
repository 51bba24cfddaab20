# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..constants import DESK_GRID_SHAPE, NUM_CLASSES
from ..math import check_divisible_shape
from ..utils import seeded_torch_rng


@dataclass(frozen=True)
class SegNetConfig:
    in_depth: int = DESK_GRID_SHAPE[0]
    in_height: int = DESK_GRID_SHAPE[1]
    in_width: int = DESK_GRID_SHAPE[2]
    num_classes: int = NUM_CLASSES
    base_channels: int = 8
    depth_levels: int = 3
    # weights of the (main, aux_2, aux_4) heads in the fused prediction
    aux_weights: tuple[float, float, float] = (1.0, 0.5, 0.25)
    use_aux: bool = True
    pool_kernel_sizes: tuple[int, ...] = (2, 3, 5)
    normalization: str = "instance"

    def __post_init__(self) -> None:
        assert self.depth_levels >= 2, "depth_levels should be >= 2 for the aux_4 head"
        assert check_divisible_shape(
            self.input_shape, 2**self.depth_levels
        ), f"input shape {self.input_shape} should be divisible by 2^depth_levels ({2 ** self.depth_levels})"
        assert self.num_classes >= 2, "num_classes should be >= 2"
        assert self.base_channels >= 1, "base_channels should be >= 1"
        assert len(self.aux_weights) == 3, "aux_weights should be (w_main, w_aux2, w_aux4)"
        assert all(w >= 0 for w in self.aux_weights), "aux_weights should be non-negative"
        assert self.aux_weights[0] > 0 or self.use_aux, "fusion weights of the used heads sum to 0"
        assert len(self.pool_kernel_sizes) > 0, "multi-scale pooling needs at least 1 branch"
        assert self.normalization in ["instance", "none"], f"unexpected normalization ({self.normalization})"

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.in_depth, self.in_height, self.in_width)

    def get_level_channels(self, level: int) -> int:
        return self.base_channels * 2**level

    def get_level_shape(self, level: int) -> tuple[int, int, int]:
        return tuple(i // 2**level for i in self.input_shape)

    @staticmethod
    def full_scale() -> "SegNetConfig":
        return SegNetConfig(in_depth=16, in_height=128, in_width=128, base_channels=64)


@dataclass
class SegOutput:
    fused: torch.Tensor
    head_main: torch.Tensor
    head_aux2: torch.Tensor | None = None
    head_aux4: torch.Tensor | None = None
    logits: dict[str, torch.Tensor] = field(default_factory=dict)


def _get_normalization(normalization: str, channels: int) -> nn.Module:
    if normalization == "instance":
        return nn.InstanceNorm3d(channels, affine=True)
    return nn.Identity()


class ResidualBlock3d(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, normalization: str) -> None:
        super().__init__()

        # a bias in front of instance norm is cancelled by it and would never receive gradient
        add_bias = normalization == "none"

        self.conv1 = nn.Conv3d(in_channels, out_channels, kernel_size=3, padding=1, bias=add_bias)
        self.norm1 = _get_normalization(normalization, out_channels)
        self.conv2 = nn.Conv3d(out_channels, out_channels, kernel_size=3, padding=1, bias=add_bias)
        self.norm2 = _get_normalization(normalization, out_channels)

        self.shortcut = (
            nn.Identity() if in_channels == out_channels else nn.Conv3d(in_channels, out_channels, kernel_size=1)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        residual = self.shortcut(x)

        x = F.relu(self.norm1(self.conv1(x)))
        x = self.norm2(self.conv2(x))

        return F.relu(x + residual)


class MultiScalePool3d(nn.Module):
    """parallel stride-2 max-pool branches concatenated on channels and reduced back by a 1x1x1 convolution"""

    def __init__(self, channels: int, kernel_sizes: tuple[int, ...] = (2, 3, 5)) -> None:
        super().__init__()

        self.kernel_sizes = kernel_sizes
        self.pools = nn.ModuleList(
            [nn.MaxPool3d(kernel_size=k, stride=2, padding=(k - 1) // 2) for k in kernel_sizes]
        )
        self.reduce = nn.Conv3d(channels * len(kernel_sizes), channels, kernel_size=1)

    def pool_branches(self, x: torch.Tensor) -> list[torch.Tensor]:
        assert x.dim() == 5, "expected a (B, C, Z, H, W) tensor"
        assert all(i % 2 == 0 for i in x.shape[2:]), f"spatial dims {tuple(x.shape[2:])} should be even"

        return [pool(x) for pool in self.pools]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.reduce(torch.cat(self.pool_branches(x), dim=1))


def fuse_heads(
    main: torch.Tensor,
    aux2: torch.Tensor | None,
    aux4: torch.Tensor | None,
    weights: tuple[float, float, float] = (1.0, 0.5, 0.25),
) -> torch.Tensor:
    """fuses per-head probability maps into one distribution at the main head's resolution

    Lower resolution heads are trilinearly upsampled, the result is the weight-normalized sum so it stays a
    per-voxel distribution. Heads that are None are skipped.

    Args:
        main (torch.Tensor): main head probabilities (B, C, Z, H, W)
        aux2 (torch.Tensor | None): aux_2 head probabilities at half resolution
        aux4 (torch.Tensor | None): aux_4 head probabilities at quarter resolution
        weights (tuple[float, float, float], optional): head weights. Defaults to (1.0, 0.5, 0.25).

    Returns:
        torch.Tensor: fused probabilities (B, C, Z, H, W)
    """

    assert all(w >= 0 for w in weights), "fusion weights should be non-negative"

    fused = None
    total_weight = 0

    for head, weight in zip((main, aux2, aux4), weights):
        if head is None or weight == 0:
            continue

        if head.shape[2:] != main.shape[2:]:
            head = F.interpolate(head, size=main.shape[2:], mode="trilinear", align_corners=False)

        fused = weight * head if fused is None else fused + weight * head
        total_weight += weight

    assert total_weight > 0, "fusion weights of the present heads sum to 0"

    return fused / total_weight


class SegNet(nn.Module):
    """residual U-net with multi-scale pooling and auxiliary classifiers at 1/2 and 1/4 resolution"""

    def __init__(self, config: SegNetConfig) -> None:
        super().__init__()

        self.config = config
        channels = [config.get_level_channels(level) for level in range(config.depth_levels + 1)]

        self.stem = ResidualBlock3d(1, channels[0], config.normalization)

        self.pools = nn.ModuleList(
            [MultiScalePool3d(channels[level], config.pool_kernel_sizes) for level in range(config.depth_levels)]
        )
        self.encoder = nn.ModuleList(
            [
                ResidualBlock3d(channels[level], channels[level + 1], config.normalization)
                for level in range(config.depth_levels)
            ]
        )
        # decoder[level] merges the upsampled level + 1 features with the level skip
        self.decoder = nn.ModuleList(
            [
                ResidualBlock3d(channels[level + 1] + channels[level], channels[level], config.normalization)
                for level in range(config.depth_levels)
            ]
        )

        self.head_main = nn.Conv3d(channels[0], config.num_classes, kernel_size=1)
        if config.use_aux:
            self.head_aux2 = nn.Conv3d(channels[1], config.num_classes, kernel_size=1)
            self.head_aux4 = nn.Conv3d(channels[2], config.num_classes, kernel_size=1)
        else:
            self.head_aux2 = None
            self.head_aux4 = None

    def get_head_feature_shapes(self) -> dict[str, tuple[int, int, int, int]]:
        shapes = {"main": (self.config.get_level_channels(0), *self.config.get_level_shape(0))}

        if self.config.use_aux:
            shapes["aux2"] = (self.config.get_level_channels(1), *self.config.get_level_shape(1))
            shapes["aux4"] = (self.config.get_level_channels(2), *self.config.get_level_shape(2))

        return shapes

    def forward(self, x: torch.Tensor) -> SegOutput:
        assert x.dim() == 5 and x.size(1) == 1, "input should be a (B, 1, Z, H, W) tensor"
        assert (
            tuple(x.shape[2:]) == self.config.input_shape
        ), f"input spatial shape {tuple(x.shape[2:])} doesn't match the config {self.config.input_shape}"

        skips = [self.stem(x)]
        for pool, block in zip(self.pools, self.encoder):
            skips.append(block(pool(skips[-1])))

        decoded = {}
        x = skips[-1]
        for level in reversed(range(self.config.depth_levels)):
            x = F.interpolate(x, size=skips[level].shape[2:], mode="trilinear", align_corners=False)
            x = self.decoder[level](torch.cat([x, skips[level]], dim=1))
            decoded[level] = x

        logits = {"main": self.head_main(decoded[0])}
        if self.config.use_aux:
            logits["aux2"] = self.head_aux2(decoded[1])
            logits["aux4"] = self.head_aux4(decoded[2])

        probabilities = {name: F.softmax(value, dim=1) for name, value in logits.items()}

        return SegOutput(
            fused=fuse_heads(
                probabilities["main"],
                probabilities.get("aux2"),
                probabilities.get("aux4"),
                weights=self.config.aux_weights,
            ),
            head_main=probabilities["main"],
            head_aux2=probabilities.get("aux2"),
            head_aux4=probabilities.get("aux4"),
            logits=logits,
        )


def build_segnet(config: SegNetConfig, seed: int = 0) -> SegNet:
    with seeded_torch_rng(seed):
        return SegNet(config)
