# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch


def poly_lr(base_lr: float, iteration: int, max_iterations: int, power: float = 0.9) -> float:
    """base_lr * (1 - iteration / max_iterations) ^ power, 0 once iteration reaches max_iterations"""

    assert iteration >= 0, "iteration should be non-negative"

    if max_iterations <= 0 or iteration >= max_iterations:
        return 0.0

    return base_lr * (1 - iteration / max_iterations) ** power


def adjust_learning_rate(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for param_group in optimizer.param_groups:
        param_group["lr"] = lr
