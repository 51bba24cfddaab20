# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from ..errors import EmptyMaskError
from .mask import BinaryMask, check_mask_pair


def dsc(gt: BinaryMask, pred: BinaryMask) -> float:
    """2 |gt & pred| / (|gt| + |pred|), 1 when both masks are empty"""

    check_mask_pair(gt, pred)

    denominator = gt.count + pred.count
    if denominator == 0:
        return 1.0

    return 2 * int((gt.data & pred.data).sum()) / denominator


def volume_difference(gt: BinaryMask, pred: BinaryMask) -> float:
    """relative volume difference in percent, negative values mean under-segmentation"""

    check_mask_pair(gt, pred)

    if gt.is_empty:
        raise EmptyMaskError("volume difference is undefined for an empty ground truth")

    return 100 * (pred.count - gt.count) / gt.count
