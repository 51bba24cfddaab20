# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass

import torch

from ..modules import SegOutput
from .segmentation import clamped_log


@dataclass
class SemiMask:
    indicator: torch.Tensor
    pseudo_labels: torch.Tensor

    @property
    def trusted_fraction(self) -> float:
        return self.indicator.float().mean().item()


def semi_loss(
    prediction: SegOutput | torch.Tensor, confidence: torch.Tensor, t_semi: float
) -> tuple[torch.Tensor, SemiMask]:
    """self-taught loss on voxels the discriminator trusts

    Pseudo labels are the argmax of the detached prediction. Voxels whose confidence is above t_semi contribute
    -ln p(pseudo label), neither the pseudo labels nor the indicator carry gradient.

    Args:
        prediction (SegOutput | torch.Tensor): S-net output or fused class probabilities (B, C, Z, H, W)
        confidence (torch.Tensor): D-net confidence map (B, Z, H, W)
        t_semi (float): trust threshold, values above 1 trust nothing

    Returns:
        tuple[torch.Tensor, SemiMask]: scalar loss and the mask it was computed with
    """

    probabilities = prediction.fused if isinstance(prediction, SegOutput) else prediction

    assert probabilities.dim() == 5, "prediction should be a (B, C, Z, H, W) tensor"
    assert (
        confidence.shape == probabilities.shape[:1] + probabilities.shape[2:]
    ), "confidence map doesn't match the prediction"
    assert t_semi >= 0, "t_semi should be non-negative"

    with torch.no_grad():
        pseudo_labels = probabilities.argmax(dim=1)
        indicator = confidence > t_semi

    log_probabilities = clamped_log(probabilities.gather(1, pseudo_labels.unsqueeze(1))).squeeze(1)
    loss = torch.where(indicator, -log_probabilities, torch.zeros_like(log_probabilities)).sum()

    return loss, SemiMask(indicator=indicator, pseudo_labels=pseudo_labels)
