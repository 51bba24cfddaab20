# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..constants import DESK_GRID_SHAPE
from ..utils import seeded_torch_rng


_FIRST_STAGE_SHAPE = (4, 4, 4)
_NOISE_SHAPE = (2, 2, 2)


@dataclass(frozen=True)
class GrowthSchedule:
    stages: tuple[tuple[int, int, int], ...]
    iterations_per_stage: int
    fade_iterations: int

    def __post_init__(self) -> None:
        assert len(self.stages) > 0, "schedule needs at least 1 stage"
        assert tuple(self.stages[0]) == _FIRST_STAGE_SHAPE, f"first stage should be {_FIRST_STAGE_SHAPE}"
        assert self.iterations_per_stage >= 0, "iterations_per_stage should be non-negative"
        assert (
            0 <= self.fade_iterations <= self.iterations_per_stage
        ), "fade_iterations should be in [0, iterations_per_stage]"

        for i in range(1, len(self.stages)):
            previous, current = self.stages[i - 1], self.stages[i]
            is_doubling = all(c == 2 * p for c, p in zip(current, previous))
            # only the last step may hold the depth and double H and W
            is_in_plane_doubling = (
                i == len(self.stages) - 1
                and current[0] == previous[0]
                and current[1] == 2 * previous[1]
                and current[2] == 2 * previous[2]
            )

            assert is_doubling or is_in_plane_doubling, f"stage {current} doesn't grow from {previous} by doubling"

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    @property
    def final_shape(self) -> tuple[int, int, int]:
        return tuple(self.stages[-1])

    @property
    def total_iterations(self) -> int:
        return self.num_stages * self.iterations_per_stage

    @staticmethod
    def from_final_shape(
        final_shape: tuple[int, int, int] = DESK_GRID_SHAPE,
        iterations_per_stage: int = 2000,
        fade_iterations: int | None = None,
    ) -> "GrowthSchedule":
        """builds the doubling schedule ending at final_shape

        A final shape with H = W = 2Z gets an in-plane only last step, e.g. (16, 32, 32) gives
        [(4, 4, 4), (8, 8, 8), (16, 16, 16), (16, 32, 32)].

        Args:
            final_shape (tuple[int, int, int], optional): last stage output shape. Defaults to DESK_GRID_SHAPE.
            iterations_per_stage (int, optional): training iterations per stage. Defaults to 2000.
            fade_iterations (int | None, optional): fade-in window, half of the stage when None. Defaults to None.

        Returns:
            GrowthSchedule: schedule
        """

        final_shape = tuple(final_shape)
        stages = [final_shape]

        depth, height, width = final_shape
        if height == width == 2 * depth:
            stages.append((depth, depth, depth))

        while stages[-1] != _FIRST_STAGE_SHAPE:
            current = stages[-1]
            assert all(
                i % 2 == 0 and i > _FIRST_STAGE_SHAPE[0] for i in current
            ), f"can't derive a doubling schedule for final shape {final_shape}"
            stages.append(tuple(i // 2 for i in current))

        if fade_iterations is None:
            fade_iterations = iterations_per_stage // 2

        return GrowthSchedule(
            stages=tuple(reversed(stages)),
            iterations_per_stage=iterations_per_stage,
            fade_iterations=fade_iterations,
        )


@dataclass(frozen=True)
class FadeState:
    alpha: float = 1.0
    stage_index: int = 0

    def __post_init__(self) -> None:
        assert 0 <= self.alpha <= 1, "alpha should be in [0, 1]"
        assert self.stage_index >= 0, "stage_index should be non-negative"


def get_fade_state(stage_index: int, iteration_in_stage: int, fade_iterations: int) -> FadeState:
    """alpha grows linearly over the first fade_iterations of a stage and then stays at 1, stage 0 never fades"""

    if stage_index == 0 or fade_iterations == 0:
        alpha = 1.0
    else:
        alpha = min(1.0, iteration_in_stage / fade_iterations)

    return FadeState(alpha=alpha, stage_index=stage_index)


@dataclass(frozen=True)
class PGGANConfig:
    latent_channels: int = 64
    max_channels: int = 64
    min_channels: int = 8
    negative_slope: float = 0.2

    def __post_init__(self) -> None:
        assert self.latent_channels >= 1, "latent_channels should be >= 1"
        assert 1 <= self.min_channels <= self.max_channels, "expected 1 <= min_channels <= max_channels"

    def get_stage_channels(self, stage_index: int) -> int:
        return max(self.min_channels, self.max_channels // 2**stage_index)


def sample_noise(
    num_samples: int, latent_channels: int, seed: int, device: torch.device | None = None
) -> torch.Tensor:
    """standard normal (N, latent_channels, 2, 2, 2) noise drawn from a dedicated generator"""

    generator = torch.Generator().manual_seed(seed)
    noise = torch.randn(num_samples, latent_channels, *_NOISE_SHAPE, generator=generator)
    return noise.to(device)


def upsample_volume(x: torch.Tensor, shape: tuple[int, int, int]) -> torch.Tensor:
    return F.interpolate(x, size=tuple(shape), mode="nearest")


def downsample_volume(x: torch.Tensor, shape: tuple[int, int, int]) -> torch.Tensor:
    """averages non-overlapping blocks, each output dim should divide the input dim"""

    kernel_size = tuple(i // o for i, o in zip(x.shape[2:], shape))
    assert all(
        k * o == i for k, o, i in zip(kernel_size, shape, x.shape[2:])
    ), f"can't downsample {tuple(x.shape[2:])} to {tuple(shape)}"

    return F.avg_pool3d(x, kernel_size=kernel_size)


def fade_blend(old: torch.Tensor, new: torch.Tensor, alpha: float) -> torch.Tensor:
    assert old.shape == new.shape, f"shape mismatch between old {tuple(old.shape)} and new {tuple(new.shape)}"
    assert 0 <= alpha <= 1, "alpha should be in [0, 1]"

    if alpha == 1:
        return new
    if alpha == 0:
        return old

    return alpha * new + (1 - alpha) * old


def _get_conv_block(in_channels: int, out_channels: int, negative_slope: float) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv3d(in_channels, out_channels, kernel_size=3, padding=1),
        nn.LeakyReLU(negative_slope),
        nn.Conv3d(out_channels, out_channels, kernel_size=3, padding=1),
        nn.LeakyReLU(negative_slope),
    )


class _ProgressiveNetwork(nn.Module):
    def __init__(self, config: PGGANConfig, stages: tuple[tuple[int, int, int], ...]) -> None:
        super().__init__()

        self.config = config
        self.stages = tuple(tuple(stage) for stage in stages)

    @property
    def num_stages(self) -> int:
        raise NotImplementedError()

    @property
    def is_final(self) -> bool:
        return self.num_stages == len(self.stages)

    def _check_fade(self, fade: FadeState) -> None:
        assert fade.stage_index < self.num_stages, (
            f"stage {fade.stage_index} is not grown yet, {self.__class__.__name__} has {self.num_stages} stage(s)"
        )

    def grow(self) -> None:
        raise NotImplementedError()


class Generator(_ProgressiveNetwork):
    """maps (N, latent, 2, 2, 2) noise to (N, 1, Z, H, W) volumes in [0, 1] at the active stage's shape"""

    def __init__(self, config: PGGANConfig, stages: tuple[tuple[int, int, int], ...]) -> None:
        super().__init__(config, stages)

        self.blocks = nn.ModuleList(
            [_get_conv_block(config.latent_channels, config.get_stage_channels(0), config.negative_slope)]
        )
        self.to_volume = nn.ModuleList([nn.Conv3d(config.get_stage_channels(0), 1, kernel_size=1)])

    @property
    def num_stages(self) -> int:
        return len(self.blocks)

    def grow(self) -> None:
        assert not self.is_final, "generator is already at the final stage"

        stage_index = self.num_stages
        in_channels = self.config.get_stage_channels(stage_index - 1)
        out_channels = self.config.get_stage_channels(stage_index)

        self.blocks.append(_get_conv_block(in_channels, out_channels, self.config.negative_slope))
        self.to_volume.append(nn.Conv3d(out_channels, 1, kernel_size=1))

    def _to_volume(self, x: torch.Tensor, stage_index: int) -> torch.Tensor:
        return torch.sigmoid(self.to_volume[stage_index](x))

    def forward(self, z: torch.Tensor, fade: FadeState) -> torch.Tensor:
        assert z.dim() == 5 and tuple(z.shape[1:]) == (
            self.config.latent_channels,
            *_NOISE_SHAPE,
        ), f"noise should be (N, {self.config.latent_channels}, 2, 2, 2)"
        self._check_fade(fade)

        x = z
        previous = None
        for stage_index in range(fade.stage_index + 1):
            previous = x
            x = self.blocks[stage_index](upsample_volume(x, self.stages[stage_index]))

        new = self._to_volume(x, fade.stage_index)
        if fade.stage_index == 0 or fade.alpha == 1:
            return new

        old = upsample_volume(self._to_volume(previous, fade.stage_index - 1), self.stages[fade.stage_index])
        return fade_blend(old, new, fade.alpha)


class Critic(_ProgressiveNetwork):
    """mirror of the generator, scores (N, 1, Z, H, W) volumes at the active stage's shape with one real per sample"""

    def __init__(self, config: PGGANConfig, stages: tuple[tuple[int, int, int], ...]) -> None:
        super().__init__(config, stages)

        channels = config.get_stage_channels(0)

        self.from_volume = nn.ModuleList([self._get_from_volume(0)])
        # blocks[s] maps stage s features to stage s - 1 features, blocks[0] ends in the score
        self.blocks = nn.ModuleList(
            [
                nn.Sequential(
                    nn.Conv3d(channels, channels, kernel_size=3, padding=1),
                    nn.LeakyReLU(config.negative_slope),
                    nn.Flatten(),
                    nn.Linear(channels * _FIRST_STAGE_SHAPE[0] * _FIRST_STAGE_SHAPE[1] * _FIRST_STAGE_SHAPE[2], 1),
                )
            ]
        )

    def _get_from_volume(self, stage_index: int) -> nn.Sequential:
        return nn.Sequential(
            nn.Conv3d(1, self.config.get_stage_channels(stage_index), kernel_size=1),
            nn.LeakyReLU(self.config.negative_slope),
        )

    @property
    def num_stages(self) -> int:
        return len(self.blocks)

    def grow(self) -> None:
        assert not self.is_final, "critic is already at the final stage"

        stage_index = self.num_stages
        in_channels = self.config.get_stage_channels(stage_index)
        out_channels = self.config.get_stage_channels(stage_index - 1)

        self.from_volume.append(self._get_from_volume(stage_index))
        self.blocks.append(_get_conv_block(in_channels, out_channels, self.config.negative_slope))

    def _down_block(self, x: torch.Tensor, stage_index: int) -> torch.Tensor:
        return downsample_volume(self.blocks[stage_index](x), self.stages[stage_index - 1])

    def forward(self, x: torch.Tensor, fade: FadeState) -> torch.Tensor:
        self._check_fade(fade)
        assert x.dim() == 5 and x.size(1) == 1, "input should be a (N, 1, Z, H, W) tensor"
        assert (
            tuple(x.shape[2:]) == self.stages[fade.stage_index]
        ), f"input shape {tuple(x.shape[2:])} doesn't match stage {fade.stage_index}"

        stage_index = fade.stage_index
        h = self.from_volume[stage_index](x)

        if stage_index > 0:
            h = self._down_block(h, stage_index)

            if fade.alpha < 1:
                old = self.from_volume[stage_index - 1](downsample_volume(x, self.stages[stage_index - 1]))
                h = fade_blend(old, h, fade.alpha)

            for i in reversed(range(1, stage_index)):
                h = self._down_block(h, i)

        return self.blocks[0](h).squeeze(-1)


def build_pggan(config: PGGANConfig, schedule: GrowthSchedule, seed: int = 0) -> tuple[Generator, Critic]:
    with seeded_torch_rng(seed):
        generator = Generator(config, schedule.stages)
        critic = Critic(config, schedule.stages)

    return generator, critic


def grow(generator: Generator, critic: Critic, seed: int = 0) -> tuple[Generator, Critic, FadeState]:
    """adds one stage to both networks in place, previously trained parameters are left untouched

    Args:
        generator (Generator): generator
        critic (Critic): critic at the same stage as the generator
        seed (int, optional): seed for the new parameters. Defaults to 0.

    Returns:
        tuple[Generator, Critic, FadeState]: the grown networks and the fade state of the new stage (alpha = 0)
    """

    assert generator.num_stages == critic.num_stages, "generator and critic are at different stages"
    assert not generator.is_final, "can't grow past the final stage"

    device = next(generator.parameters()).device
    with seeded_torch_rng(seed):
        generator.grow()
        critic.grow()

    generator.to(device)
    critic.to(device)

    return generator, critic, FadeState(alpha=0.0, stage_index=generator.num_stages - 1)
