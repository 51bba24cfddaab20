# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from ..errors import NonFiniteLossError, NonFiniteValueError
from ..losses import (
    ClassWeightTracker,
    TrainBranch,
    adversarial_loss,
    d_loss,
    semi_loss,
    total_s_loss,
    weighted_mce,
)
from ..modules import DiscInputMode, DiscNet, SegNet, make_disc_input
from .config import TrainConfig
from .log import TrainLogRow
from .schedule import adjust_learning_rate, poly_lr


@dataclass
class TrainingState:
    segnet: SegNet
    s_optimizer: torch.optim.Optimizer
    tracker: ClassWeightTracker
    discnet: DiscNet | None = None
    d_optimizer: torch.optim.Optimizer | None = None
    iteration: int = 0
    last_checkpoint: str | None = None

    @property
    def use_adversarial(self) -> bool:
        return self.discnet is not None


def build_optimizer(module: torch.nn.Module, lr: float, betas: tuple[float, float]) -> torch.optim.Adam:
    return torch.optim.Adam(module.parameters(), lr=lr, betas=betas)


def _to_float(x: torch.Tensor | float) -> float:
    return x.item() if isinstance(x, torch.Tensor) else float(x)


def _check_finite(state: TrainingState, **losses: torch.Tensor | float) -> None:
    values = {name: _to_float(value) for name, value in losses.items()}

    if not all(math.isfinite(value) for value in values.values()):
        raise NonFiniteLossError(iteration=state.iteration, last_checkpoint=state.last_checkpoint, losses=values)


def _get_confidence(discnet: DiscNet, volumes: torch.Tensor, probabilities: torch.Tensor, mode: DiscInputMode):
    # D is frozen, gradient only flows back into S through the input
    discnet.requires_grad_(False)
    try:
        return discnet(make_disc_input(volumes, probabilities, mode))
    finally:
        discnet.requires_grad_(True)


def _check_finite_volumes(volumes: torch.Tensor) -> None:
    if not torch.isfinite(volumes).all():
        raise NonFiniteValueError("volumes contain non-finite values")


def _check_finite_prediction(state: TrainingState, probabilities: torch.Tensor) -> None:
    if not torch.isfinite(probabilities).all():
        raise NonFiniteLossError(
            iteration=state.iteration, last_checkpoint=state.last_checkpoint, losses={"prediction": math.nan}
        )


def update_segnet_labeled(
    state: TrainingState, volumes: torch.Tensor, labels: torch.Tensor, config: TrainConfig
) -> tuple[torch.Tensor, float, torch.Tensor, torch.Tensor | None]:
    """S-update of a labeled iteration on L_vox + lambda_adv * L_adv, D parameters are left untouched

    Args:
        state (TrainingState): training state, S-net and its optimizer are updated in place
        volumes (torch.Tensor): normalized CT crops (B, 1, Z, H, W)
        labels (torch.Tensor): ground truth (B, Z, H, W)
        config (TrainConfig): run config

    Raises:
        NonFiniteValueError: if the volumes aren't finite
        NonFiniteLossError: if the prediction or a loss isn't finite, before the class weights or any parameter
            change

    Returns:
        tuple[torch.Tensor, float, torch.Tensor, torch.Tensor | None]: detached fused prediction, S learning rate,
            L_vox and L_adv (None without a discriminator)
    """

    _check_finite_volumes(volumes)

    lr_s = poly_lr(config.s_lr, state.iteration, config.max_iterations, config.poly_power)
    adjust_learning_rate(state.s_optimizer, lr_s)

    state.segnet.train()
    output = state.segnet(volumes)
    _check_finite_prediction(state, output.fused)

    class_weights = state.tracker.update(output.fused.detach().argmax(dim=1), labels)
    l_vox = weighted_mce(output, labels, class_weights)

    if state.use_adversarial:
        l_adv = adversarial_loss(_get_confidence(state.discnet, volumes, output.fused, config.disc_input_mode))
    else:
        l_adv = torch.zeros_like(l_vox)

    loss = total_s_loss(l_vox, l_adv, 0, config.loss_weights, TrainBranch.labeled)
    _check_finite(state, l_vox=l_vox, l_adv=l_adv)

    state.s_optimizer.zero_grad(set_to_none=True)
    loss.backward()
    state.s_optimizer.step()

    return output.fused.detach(), lr_s, l_vox, l_adv if state.use_adversarial else None


def update_discnet(
    state: TrainingState, volumes: torch.Tensor, labels: torch.Tensor, fake: torch.Tensor, config: TrainConfig
) -> tuple[float, torch.Tensor]:
    """D-update on the D loss between ground truth pairs and (volume, prediction) pairs, S-net is left untouched

    Args:
        state (TrainingState): training state with a discriminator, D-net and its optimizer are updated in place
        volumes (torch.Tensor): normalized CT crops (B, 1, Z, H, W)
        labels (torch.Tensor): ground truth (B, Z, H, W)
        fake (torch.Tensor): detached S-net class probabilities (B, C, Z, H, W)
        config (TrainConfig): run config

    Raises:
        NonFiniteLossError: if the D loss isn't finite, before the D parameters change

    Returns:
        tuple[float, torch.Tensor]: D learning rate and the D loss
    """

    assert state.use_adversarial, "D-updates need a discriminator"
    assert not fake.requires_grad, "the prediction should be detached from the S-net"

    lr_d = poly_lr(config.d_lr, state.iteration, config.max_iterations, config.poly_power)
    adjust_learning_rate(state.d_optimizer, lr_d)

    ground_truth = F.one_hot(labels, num_classes=fake.size(1)).movedim(-1, 1).to(volumes.dtype)

    confidence_real = state.discnet(make_disc_input(volumes, ground_truth, DiscInputMode.hard))
    confidence_fake = state.discnet(make_disc_input(volumes, fake, DiscInputMode.hard))

    l_d = d_loss(confidence_real, confidence_fake)
    _check_finite(state, l_d=l_d)

    state.d_optimizer.zero_grad(set_to_none=True)
    l_d.backward()
    state.d_optimizer.step()

    return lr_d, l_d


def train_step_labeled(
    state: TrainingState, volumes: torch.Tensor, labels: torch.Tensor, config: TrainConfig
) -> TrainLogRow:
    """one labeled iteration: S-update on L_vox + lambda_adv * L_adv, then a D-update on the D loss

    Args:
        state (TrainingState): training state, updated in place
        volumes (torch.Tensor): normalized CT crops (B, 1, Z, H, W)
        labels (torch.Tensor): ground truth (B, Z, H, W)
        config (TrainConfig): run config

    Raises:
        NonFiniteValueError: if the volumes aren't finite
        NonFiniteLossError: if the prediction or a loss isn't finite, before the network it belongs to changes

    Returns:
        TrainLogRow: losses and learning rates of this iteration
    """

    fake, lr_s, l_vox, l_adv = update_segnet_labeled(state, volumes, labels, config)

    lr_d = None
    l_d = None
    if state.use_adversarial:
        lr_d, l_d = update_discnet(state, volumes, labels, fake, config)

    state.iteration += 1

    return TrainLogRow(
        iteration=state.iteration,
        branch=TrainBranch.labeled,
        lr_s=lr_s,
        lr_d=lr_d,
        l_vox=l_vox.item(),
        l_adv=None if l_adv is None else l_adv.item(),
        l_d=None if l_d is None else l_d.item(),
    )


def train_step_unlabeled(state: TrainingState, volumes: torch.Tensor, config: TrainConfig) -> TrainLogRow:
    """one unlabeled iteration: S-update on lambda_adv * L_adv + lambda_semi * L_semi, D is never updated here

    Args:
        state (TrainingState): training state, updated in place
        volumes (torch.Tensor): normalized unlabeled CT crops (B, 1, Z, H, W)
        config (TrainConfig): run config

    Raises:
        NonFiniteValueError: if the volumes aren't finite
        NonFiniteLossError: if the prediction or a loss isn't finite, before any parameter changes

    Returns:
        TrainLogRow: losses of this iteration with the fraction of trusted voxels
    """

    assert (
        state.iteration >= config.pretrain_iterations
    ), f"unlabeled steps aren't allowed during pretraining (iteration {state.iteration})"
    assert state.use_adversarial, "unlabeled steps need a discriminator"
    _check_finite_volumes(volumes)

    loss_weights = config.loss_weights

    lr_s = poly_lr(config.s_lr, state.iteration, config.max_iterations, config.poly_power)
    adjust_learning_rate(state.s_optimizer, lr_s)

    state.segnet.train()
    output = state.segnet(volumes)
    _check_finite_prediction(state, output.fused)

    confidence = _get_confidence(state.discnet, volumes, output.fused, config.disc_input_mode)
    l_adv = adversarial_loss(confidence)
    l_semi, semi_mask = semi_loss(output, confidence, loss_weights.t_semi)

    loss = total_s_loss(0, l_adv, l_semi, loss_weights, TrainBranch.unlabeled)
    _check_finite(state, l_adv=l_adv, l_semi=l_semi)

    # S-net stays untouched when both unlabeled weights are 0
    if loss_weights.lambda_adv_unlabeled > 0 or loss_weights.lambda_semi > 0:
        state.s_optimizer.zero_grad(set_to_none=True)
        loss.backward()
        state.s_optimizer.step()

    state.iteration += 1

    return TrainLogRow(
        iteration=state.iteration,
        branch=TrainBranch.unlabeled,
        lr_s=lr_s,
        l_adv=l_adv.item(),
        l_semi=l_semi.item(),
        trusted_frac=semi_mask.trusted_fraction,
    )
