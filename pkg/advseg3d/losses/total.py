# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from enum import Enum

import torch

from .weights import LossWeights


class TrainBranch(Enum):
    labeled = "labeled"
    unlabeled = "unlabeled"


def _is_zero(x: torch.Tensor | float) -> bool:
    if isinstance(x, torch.Tensor):
        return bool((x.detach() == 0).all())
    return x == 0


def total_s_loss(
    l_vox: torch.Tensor | float,
    l_adv: torch.Tensor | float,
    l_semi: torch.Tensor | float,
    loss_weights: LossWeights,
    branch: TrainBranch,
) -> torch.Tensor | float:
    """L_vox + lambda_adv(branch) * L_adv + lambda_semi * L_semi"""

    if branch == TrainBranch.labeled:
        assert _is_zero(l_semi), "the labeled branch has no semi-supervised loss"
        return l_vox + loss_weights.lambda_adv_labeled * l_adv

    assert branch == TrainBranch.unlabeled, f"unexpected branch ({branch})"
    assert _is_zero(l_vox), "the unlabeled branch has no voxel-wise loss"

    return loss_weights.lambda_adv_unlabeled * l_adv + loss_weights.lambda_semi * l_semi
