# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..constants import NUM_CLASSES


@dataclass(frozen=True)
class LossWeights:
    lambda_adv_labeled: float = 0.01
    lambda_adv_unlabeled: float = 0.001
    lambda_semi: float = 0.1
    t_semi: float = 0.2

    def __post_init__(self) -> None:
        assert self.lambda_adv_labeled >= 0, "lambda_adv_labeled should be non-negative"
        assert self.lambda_adv_unlabeled >= 0, "lambda_adv_unlabeled should be non-negative"
        assert self.lambda_semi >= 0, "lambda_semi should be non-negative"
        assert 0 <= self.t_semi <= 1, "t_semi should be in [0, 1]"


@dataclass(frozen=True)
class ClassWeights:
    weights: tuple[float, ...]
    dsc_snapshot: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def num_classes(self) -> int:
        return len(self.weights)

    def to_tensor(self, device: torch.device | None = None, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return torch.tensor(self.weights, device=device, dtype=dtype)

    @staticmethod
    def uniform(num_classes: int = NUM_CLASSES) -> "ClassWeights":
        return ClassWeights(weights=(1.0,) * num_classes, dsc_snapshot=(1.0,) * num_classes, counts=(1,) * num_classes)


def adaptive_weights(dsc_per_class: list[float] | np.ndarray, counts: list[int] | np.ndarray) -> ClassWeights:
    """per-class weights 2 - DSC_c + ln(total / count_c), counts of absent classes are floored at 1 voxel

    Args:
        dsc_per_class (list[float] | np.ndarray): current DSC of every class
        counts (list[int] | np.ndarray): ground truth voxel count of every class

    Returns:
        ClassWeights: weights together with the inputs they were computed from
    """

    dsc_per_class = np.asarray(dsc_per_class, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)

    assert dsc_per_class.shape == counts.shape and counts.ndim == 1, "expected 1 DSC and 1 count per class"
    assert (counts >= 0).all(), "counts should be non-negative"
    assert ((dsc_per_class >= 0) & (dsc_per_class <= 1)).all(), "DSC values should be in [0, 1]"

    total = int(counts.sum())
    if total == 0:
        raise ValueError("all class counts are 0, adaptive weights are undefined")

    weights = tuple(
        2 - float(dsc) + math.log(total / max(int(count), 1)) for dsc, count in zip(dsc_per_class, counts)
    )

    return ClassWeights(
        weights=weights, dsc_snapshot=tuple(float(i) for i in dsc_per_class), counts=tuple(int(i) for i in counts)
    )


def get_batch_dsc(predicted: torch.Tensor, target: torch.Tensor, num_classes: int) -> tuple[np.ndarray, np.ndarray]:
    """per-class DSC of hard predictions against the ground truth over a whole batch

    Returns:
        tuple[np.ndarray, np.ndarray]: DSC per class (NaN for classes absent from both) and ground truth counts
    """

    assert predicted.shape == target.shape, "predicted and target labels should have the same shape"

    predicted = predicted.flatten()
    target = target.flatten()

    predicted_counts = torch.bincount(predicted, minlength=num_classes)
    target_counts = torch.bincount(target, minlength=num_classes)
    intersection = torch.bincount(target[predicted == target], minlength=num_classes)

    predicted_counts = predicted_counts.cpu().numpy()
    target_counts = target_counts.cpu().numpy()
    intersection = intersection.cpu().numpy()

    denominator = predicted_counts + target_counts
    dsc = np.full(num_classes, np.nan)
    np.divide(2 * intersection, denominator, out=dsc, where=denominator > 0)

    return dsc, target_counts


class ClassWeightTracker:
    """recomputes the adaptive weights every batch, classes absent from the batch keep their last DSC (initially 0)"""

    def __init__(self, num_classes: int = NUM_CLASSES) -> None:
        self.num_classes = num_classes
        self.last_dsc = np.zeros(num_classes, dtype=np.float64)

    @torch.no_grad()
    def update(self, predicted: torch.Tensor, target: torch.Tensor) -> ClassWeights:
        dsc, counts = get_batch_dsc(predicted, target, self.num_classes)

        present = counts > 0
        self.last_dsc[present] = dsc[present]

        return adaptive_weights(self.last_dsc, counts)

    def state_dict(self) -> dict:
        return {"last_dsc": self.last_dsc.tolist()}

    def load_state_dict(self, state_dict: dict) -> None:
        last_dsc = np.asarray(state_dict["last_dsc"], dtype=np.float64)
        assert last_dsc.shape == (self.num_classes,), "state doesn't match the number of classes"
        self.last_dsc = last_dsc
