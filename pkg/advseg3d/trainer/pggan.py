# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import math
import os
from dataclasses import dataclass, field

import torch
from tqdm import tqdm

from ..constants import DEFAULT_SPACING_MM, DESK_GRID_SHAPE
from ..data import CtVolume, volume_to_tensor
from ..errors import NonFiniteLossError
from ..losses import gradient_penalty
from ..modules import (
    Critic,
    FadeState,
    Generator,
    GrowthSchedule,
    PGGANConfig,
    build_pggan,
    downsample_volume,
    fade_blend,
    get_fade_state,
    grow,
    sample_noise,
    upsample_volume,
)
from ..utils import (
    dataclass_to_dict,
    derive_seed,
    ensure_directory,
    get_device,
    get_logger,
    is_progress_enabled,
    parse_dataclass,
    seeded_torch_rng,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .log import CSVLogWriter, PGGANLogRow


logger = get_logger(__name__)

PGGAN_LOG = "pggan_log.csv"


@dataclass(frozen=True)
class PGGANTrainConfig:
    dataset_dir: str | None = None
    final_shape: tuple[int, int, int] = DESK_GRID_SHAPE
    iterations_per_stage: int = 2000
    # None fades over the first half of every stage
    fade_iterations: int | None = None
    batch_size: int = 4
    lr: float = 1e-3
    betas: tuple[float, float] = (0.0, 0.99)
    gradient_penalty_weight: float = 10.0
    epsilon_drift: float = 1e-3
    model: PGGANConfig = field(default_factory=PGGANConfig)
    seed: int = 42
    device: str | None = None

    def __post_init__(self) -> None:
        assert self.batch_size >= 1, "batch_size should be >= 1"
        assert self.lr > 0, "lr should be positive"
        assert self.gradient_penalty_weight >= 0, "gradient_penalty_weight should be non-negative"
        assert self.epsilon_drift >= 0, "epsilon_drift should be non-negative"
        # builds and validates the schedule
        self.get_schedule()

    def get_schedule(self) -> GrowthSchedule:
        return GrowthSchedule.from_final_shape(self.final_shape, self.iterations_per_stage, self.fade_iterations)


@dataclass
class PGGANResult:
    generator: Generator
    critic: Critic
    schedule: GrowthSchedule
    log_rows: list[PGGANLogRow]
    checkpoints: list[str]


def _get_real_batch(
    volumes: torch.Tensor, indices: torch.Tensor, schedule: GrowthSchedule, fade: FadeState
) -> torch.Tensor:
    """real volumes at the active stage, blended with the previous resolution the same way as generated ones"""

    real = volumes[indices]
    stage_shape = schedule.stages[fade.stage_index]
    current = downsample_volume(real, stage_shape)

    if fade.stage_index == 0 or fade.alpha == 1:
        return current

    previous_shape = schedule.stages[fade.stage_index - 1]
    previous = upsample_volume(downsample_volume(real, previous_shape), stage_shape)

    return fade_blend(previous, current, fade.alpha)


def _save_stage(
    path: str, generator: Generator, critic: Critic, config: PGGANTrainConfig, iteration: int, fade: FadeState
) -> str:
    return save_checkpoint(
        path,
        kind="pggan",
        state={"generator": generator.state_dict(), "critic": critic.state_dict()},
        config=dataclass_to_dict(config),
        iteration=iteration,
        seed=config.seed,
        stage_index=fade.stage_index,
        stage_shape=list(generator.stages[fade.stage_index]),
        alpha=fade.alpha,
    )


def train_pggan(volumes: list[CtVolume], config: PGGANTrainConfig, out_dir: str | None = None) -> PGGANResult:
    """progressively grown WGAN-GP training on normalized volumes at the final stage shape

    Every stage trains for iterations_per_stage iterations with one critic and one generator update each. New
    stages fade in linearly over fade_iterations. The critic loss is
    E[D(fake)] - E[D(real)] + gradient_penalty_weight * GP + epsilon_drift * E[D(real)^2].

    Args:
        volumes (list[CtVolume]): real normalized volumes
        config (PGGANTrainConfig): training config
        out_dir (str | None, optional): receives the CSV log and one checkpoint per stage. Defaults to None.

    Raises:
        NonFiniteLossError: if a loss becomes NaN or infinite

    Returns:
        PGGANResult: trained networks, log rows and stage checkpoint paths
    """

    assert len(volumes) > 0, "PGGAN training needs at least 1 volume"

    schedule = config.get_schedule()
    for volume in volumes:
        assert volume.normalized, "PGGAN trains on normalized volumes"
        assert volume.shape == schedule.final_shape, f"volume shape {volume.shape} isn't {schedule.final_shape}"

    device = get_device(config.device)
    real_volumes = volume_to_tensor(volumes, device=device)

    generator, critic = build_pggan(config.model, schedule, seed=derive_seed(config.seed, "pggan"))
    generator.to(device)
    critic.to(device)

    rng = torch.Generator().manual_seed(derive_seed(config.seed, "pggan", "batches"))

    log_writer = None
    if out_dir is not None:
        ensure_directory(out_dir)
        log_writer = CSVLogWriter(os.path.join(out_dir, PGGAN_LOG), PGGANLogRow)

    log_rows = []
    checkpoints = []
    iteration = 0
    last_checkpoint = None

    progress_bar = tqdm(total=schedule.total_iterations, disable=not is_progress_enabled(), desc="pggan")

    for stage_index in range(schedule.num_stages):
        if stage_index > 0:
            grow(generator, critic, seed=derive_seed(config.seed, "pggan", "grow", stage_index))

        # new parameters join at every stage so the optimizers restart
        g_optimizer = torch.optim.Adam(generator.parameters(), lr=config.lr, betas=config.betas)
        c_optimizer = torch.optim.Adam(critic.parameters(), lr=config.lr, betas=config.betas)

        fade = get_fade_state(stage_index, 0, schedule.fade_iterations)

        for iteration_in_stage in range(schedule.iterations_per_stage):
            fade = get_fade_state(stage_index, iteration_in_stage, schedule.fade_iterations)

            indices = torch.randint(len(volumes), (config.batch_size,), generator=rng).to(device)
            real = _get_real_batch(real_volumes, indices, schedule, fade)
            noise_seed = int(torch.randint(2**31 - 1, (1,), generator=rng))

            # critic update
            noise = sample_noise(config.batch_size, config.model.latent_channels, noise_seed, device)
            with torch.no_grad():
                fake = generator(noise, fade)

            real_scores = critic(real, fade)
            fake_scores = critic(fake, fade)
            penalty = gradient_penalty(critic, real, fake, fade, generator=rng)
            critic_loss = (
                fake_scores.mean()
                - real_scores.mean()
                + config.gradient_penalty_weight * penalty
                + config.epsilon_drift * real_scores.pow(2).mean()
            )

            c_optimizer.zero_grad(set_to_none=True)
            critic_loss.backward()
            c_optimizer.step()

            # generator update
            critic.requires_grad_(False)
            noise = sample_noise(config.batch_size, config.model.latent_channels, noise_seed + 1, device)
            generator_loss = -critic(generator(noise, fade), fade).mean()

            g_optimizer.zero_grad(set_to_none=True)
            generator_loss.backward()
            g_optimizer.step()
            critic.requires_grad_(True)

            iteration += 1

            row = PGGANLogRow(
                iteration=iteration,
                stage_index=stage_index,
                alpha=fade.alpha,
                critic_loss=critic_loss.item(),
                generator_loss=generator_loss.item(),
                gradient_penalty=penalty.item(),
            )

            if not all(math.isfinite(i) for i in [row.critic_loss, row.generator_loss, row.gradient_penalty]):
                raise NonFiniteLossError(
                    iteration=iteration,
                    last_checkpoint=last_checkpoint,
                    losses={"critic_loss": row.critic_loss, "generator_loss": row.generator_loss},
                )

            log_rows.append(row)
            if log_writer is not None:
                log_writer.write(row)
            progress_bar.update(1)

        if schedule.iterations_per_stage > 0:
            fade = get_fade_state(stage_index, schedule.iterations_per_stage, schedule.fade_iterations)

        logger.info("finished pggan stage %d %s", stage_index, schedule.stages[stage_index])

        if out_dir is not None:
            last_checkpoint = _save_stage(
                os.path.join(out_dir, f"stage_{stage_index}"), generator, critic, config, iteration, fade
            )
            checkpoints.append(last_checkpoint)

    progress_bar.close()

    return PGGANResult(
        generator=generator, critic=critic, schedule=schedule, log_rows=log_rows, checkpoints=checkpoints
    )


def load_generator(path: str, device: torch.device | None = None) -> Generator:
    """rebuilds the generator of a pggan checkpoint grown to the checkpoint's stage"""

    manifest, state = load_checkpoint(path)
    assert manifest["kind"] == "pggan", f"checkpoint ({path}) is not a pggan checkpoint"

    config = parse_dataclass(PGGANTrainConfig, manifest["config"])

    # parameters are overwritten by the checkpoint, the seeds only keep construction off the global RNG
    generator, _ = build_pggan(config.model, config.get_schedule(), seed=0)
    for _ in range(manifest["stage_index"]):
        with seeded_torch_rng(0):
            generator.grow()

    generator.load_state_dict(state["generator"])
    return generator.to(device)


@torch.no_grad()
def synthesize(
    generator: Generator,
    num_volumes: int,
    seed: int,
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM,
    device: torch.device | None = None,
) -> list[CtVolume]:
    """draws num_volumes final-stage volumes, deterministic given the generator parameters and seed"""

    assert generator.is_final, "synthesis needs a generator grown to the final stage"
    assert num_volumes >= 0, "num_volumes should be non-negative"

    if num_volumes == 0:
        return []

    generator.eval()

    noise = sample_noise(num_volumes, generator.config.latent_channels, seed, device)
    output = generator(noise, FadeState(alpha=1.0, stage_index=generator.num_stages - 1))

    return [
        CtVolume(data=volume[0].clamp(0, 1).float().cpu().numpy(), spacing_mm=spacing_mm, normalized=True)
        for volume in output
    ]
