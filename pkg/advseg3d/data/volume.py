# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass

import numpy as np

from ..constants import DEFAULT_SPACING_MM, NUM_CLASSES


_SUM_TOLERANCE = 1e-5


def _freeze(x: np.ndarray, dtype: np.dtype) -> np.ndarray:
    x = np.array(x, dtype=dtype, copy=True)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class CtVolume:
    """single-channel intensity volume indexed (z, h, w)"""

    data: np.ndarray
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM
    normalized: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _freeze(self.data, np.float32))
        object.__setattr__(self, "spacing_mm", tuple(float(i) for i in self.spacing_mm))

        assert self.data.ndim == 3, "volume should be 3 dimensional (z, h, w)"
        assert all(i >= 1 for i in self.data.shape), "every volume dimension should be >= 1"
        assert len(self.spacing_mm) == 3, "spacing_mm should have 3 components"
        assert all(i > 0 for i in self.spacing_mm), "spacing_mm components should be strictly positive"

        if self.normalized:
            assert self.data.min() >= 0 and self.data.max() <= 1, "normalized volume should lie in [0, 1]"

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class LabelMap:
    """per-voxel class assignment over `num_classes` classes, background is class 0"""

    classes: np.ndarray
    num_classes: int = NUM_CLASSES

    def __post_init__(self) -> None:
        classes = np.asarray(self.classes)
        assert np.issubdtype(classes.dtype, np.integer), "label classes should be integers"
        assert classes.ndim == 3, "label map should be 3 dimensional (z, h, w)"
        assert self.num_classes >= 2, "at least 2 classes are needed"

        if classes.size > 0:
            assert classes.min() >= 0, "class values should be non-negative"
            assert classes.max() < self.num_classes, f"class values should be < {self.num_classes}"

        object.__setattr__(self, "classes", _freeze(classes, np.int64))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.classes.shape

    def get_counts(self) -> np.ndarray:
        return np.bincount(self.classes.reshape(-1), minlength=self.num_classes)


@dataclass(frozen=True)
class OneHotMap:
    """per-voxel class distribution of shape (c, z, h, w), hard for ground truth and soft for predictions"""

    data: np.ndarray
    num_classes: int = NUM_CLASSES

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _freeze(self.data, np.float32))

        assert self.data.ndim == 4, "one hot map should be 4 dimensional (c, z, h, w)"
        assert self.data.shape[0] == self.num_classes, "channel count should equal num_classes"
        assert self.data.min() >= 0 and self.data.max() <= 1, "channel values should lie in [0, 1]"

        channel_sum = self.data.sum(axis=0, dtype=np.float64)
        assert np.abs(channel_sum - 1).max() <= _SUM_TOLERANCE, "channel values should sum to 1 at every voxel"

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape[1:]
