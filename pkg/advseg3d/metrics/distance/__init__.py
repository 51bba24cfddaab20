# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import numpy as np

from ...backend import MetricBackend
from ...errors import EmptyMaskError
from ..mask import BinaryMask, check_mask_pair
from .brute_force_implementation import directed_distances_brute_force, extract_surface_brute_force
from .edt_implementation import directed_distances_edt, extract_surface_edt


def _check_not_empty(*masks: BinaryMask) -> None:
    for mask in masks:
        if mask.is_empty:
            raise EmptyMaskError("distance metrics are undefined for empty masks (organ missing)")


def directed_distances(
    source: BinaryMask, target: BinaryMask, backend: MetricBackend = MetricBackend.edt
) -> np.ndarray:
    """distance in mm from every source voxel to its nearest target voxel

    Args:
        source (BinaryMask): voxels to measure from
        target (BinaryMask): voxels to measure to
        backend (MetricBackend, optional): edt uses an exact Euclidean distance transform, brute_force compares
            every pair of voxels. Defaults to MetricBackend.edt.

    Returns:
        np.ndarray: float64 distances, one per source voxel in C order
    """

    check_mask_pair(source, target)
    _check_not_empty(source, target)

    if backend == MetricBackend.edt:
        return directed_distances_edt(source.data, target.data, source.spacing_mm)
    elif backend == MetricBackend.brute_force:
        return directed_distances_brute_force(source.data, target.data, source.spacing_mm)

    raise ValueError(f"unexpected backend ({backend})")


def extract_surface(mask: BinaryMask, backend: MetricBackend = MetricBackend.edt) -> BinaryMask:
    """foreground voxels with a 6-connected neighbour outside the foreground, voxels on the volume border included"""

    _check_not_empty(mask)

    if backend == MetricBackend.edt:
        surface = extract_surface_edt(mask.data)
    elif backend == MetricBackend.brute_force:
        surface = extract_surface_brute_force(mask.data)
    else:
        raise ValueError(f"unexpected backend ({backend})")

    return BinaryMask(surface, mask.spacing_mm)


def ahd(gt: BinaryMask, pred: BinaryMask, backend: MetricBackend = MetricBackend.edt) -> float:
    """average Hausdorff distance in mm, the larger of the two directed mean distances over all voxels"""

    return max(
        float(directed_distances(gt, pred, backend).mean()),
        float(directed_distances(pred, gt, backend).mean()),
    )


def ashd(gt: BinaryMask, pred: BinaryMask, backend: MetricBackend = MetricBackend.edt) -> float:
    """average surface Hausdorff distance in mm, the mean of the two directed mean surface distances"""

    check_mask_pair(gt, pred)

    gt_surface = extract_surface(gt, backend)
    pred_surface = extract_surface(pred, backend)

    return 0.5 * (
        float(directed_distances(gt_surface, pred_surface, backend).mean())
        + float(directed_distances(pred_surface, gt_surface, backend).mean())
    )
