# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch

from ..constants import LOG_EPSILON
from ..modules import Critic, FadeState
from .segmentation import clamped_log


def bce_confidence(confidence: torch.Tensor, target: float) -> torch.Tensor:
    """binary cross-entropy of a confidence map against a constant target, summed over voxels and batch"""

    assert target in [0, 1], "target should be 0 or 1"

    if target == 1:
        return -clamped_log(confidence).sum()

    return -clamped_log(1 - confidence).sum()


def adversarial_loss(confidence_fake: torch.Tensor) -> torch.Tensor:
    return bce_confidence(confidence_fake, 1)


def d_loss(confidence_real: torch.Tensor, confidence_fake: torch.Tensor) -> torch.Tensor:
    return bce_confidence(confidence_real, 1) + bce_confidence(confidence_fake, 0)


def gradient_penalty(
    critic: Critic,
    real: torch.Tensor,
    fake: torch.Tensor,
    fade: FadeState,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """mean of (||grad critic(x_hat)|| - 1)^2 at random points between real and generated volumes"""

    assert real.shape == fake.shape, "real and fake volumes should have the same shape"

    mix = torch.rand(real.size(0), 1, 1, 1, 1, generator=generator).to(device=real.device, dtype=real.dtype)
    interpolated = (mix * real.detach() + (1 - mix) * fake.detach()).requires_grad_(True)

    scores = critic(interpolated, fade)
    (gradients,) = torch.autograd.grad(
        outputs=scores, inputs=interpolated, grad_outputs=torch.ones_like(scores), create_graph=True
    )

    gradient_norm = (gradients.flatten(start_dim=1).pow(2).sum(dim=1) + LOG_EPSILON).sqrt()
    return (gradient_norm - 1).pow(2).mean()
