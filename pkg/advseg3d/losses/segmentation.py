# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch

from ..constants import LOG_EPSILON
from ..errors import NonFiniteValueError
from ..modules import SegOutput
from .weights import ClassWeights


def clamped_log(x: torch.Tensor) -> torch.Tensor:
    return torch.log(x.clamp(LOG_EPSILON, 1))


def weighted_mce(
    prediction: SegOutput | torch.Tensor, target: torch.Tensor, class_weights: ClassWeights | torch.Tensor
) -> torch.Tensor:
    """adaptively weighted multi-class cross-entropy summed over voxels and batch

    Args:
        prediction (SegOutput | torch.Tensor): S-net output or fused class probabilities (B, C, Z, H, W)
        target (torch.Tensor): ground truth class indices (B, Z, H, W)
        class_weights (ClassWeights | torch.Tensor): per-class weights

    Returns:
        torch.Tensor: scalar loss
    """

    probabilities = prediction.fused if isinstance(prediction, SegOutput) else prediction

    assert probabilities.dim() == 5, "prediction should be a (B, C, Z, H, W) tensor"
    assert target.dim() == 4, "target should be a (B, Z, H, W) tensor"
    assert (
        probabilities.size(0) == target.size(0) and probabilities.shape[2:] == target.shape[1:]
    ), "prediction and target shapes don't agree"

    if torch.isnan(probabilities).any():
        raise NonFiniteValueError("prediction contains NaN")

    if isinstance(class_weights, ClassWeights):
        class_weights = class_weights.to_tensor(device=probabilities.device, dtype=probabilities.dtype)

    assert class_weights.numel() == probabilities.size(1), "expected 1 weight per class"

    log_probabilities = clamped_log(probabilities.gather(1, target.unsqueeze(1))).squeeze(1)
    return -(class_weights[target] * log_probabilities).sum()
