# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass

import numpy as np

from ..constants import DEFAULT_SPACING_MM


@dataclass(frozen=True)
class BinaryMask:
    data: np.ndarray
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=bool, copy=True)
        assert data.ndim == 3, "mask should be a 3D array"
        assert len(self.spacing_mm) == 3 and all(s > 0 for s in self.spacing_mm), "spacing should be positive"

        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing_mm", tuple(float(s) for s in self.spacing_mm))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def count(self) -> int:
        return int(self.data.sum())

    @property
    def is_empty(self) -> bool:
        return not self.data.any()

    def with_spacing(self, spacing_mm: tuple[float, float, float]) -> "BinaryMask":
        return BinaryMask(self.data, spacing_mm)


def check_mask_pair(gt: BinaryMask, pred: BinaryMask) -> None:
    assert gt.shape == pred.shape, f"mask shapes {gt.shape} and {pred.shape} differ"
    assert gt.spacing_mm == pred.spacing_mm, "masks should share the voxel spacing"
