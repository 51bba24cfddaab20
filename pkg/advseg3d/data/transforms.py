# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import numpy as np
import torch

from ..constants import DEFAULT_INTENSITY_WINDOW
from ..errors import NonFiniteValueError
from .volume import CtVolume, LabelMap, OneHotMap


def normalize_intensity(
    raw: CtVolume, window: tuple[float, float] = DEFAULT_INTENSITY_WINDOW
) -> CtVolume:
    """linearly maps the intensity window [lo, hi] onto [0, 1], values outside the window are clipped

    Args:
        raw (CtVolume): volume in raw intensity units
        window (tuple[float, float], optional): intensity window. Defaults to DEFAULT_INTENSITY_WINDOW.

    Returns:
        CtVolume: normalized volume
    """

    assert not raw.normalized, "volume is already normalized"

    lo, hi = window
    assert hi > lo, "window upper edge should be bigger than the lower edge"

    if not np.isfinite(raw.data).all():
        num_bad = int((~np.isfinite(raw.data)).sum())
        raise NonFiniteValueError(f"volume contains {num_bad} non-finite voxels, normalization refused")

    data = (raw.data.astype(np.float64) - lo) / (hi - lo)
    data = np.clip(data, 0, 1)

    return CtVolume(data=data, spacing_mm=raw.spacing_mm, normalized=True)


def get_num_crop_offsets(num_slices: int, depth: int) -> int:
    assert 1 <= depth <= num_slices, "crop depth should be in [1, num_slices]"
    return num_slices - depth + 1


def random_crop_subvolume(
    vol: CtVolume, labels: LabelMap | None, depth: int, rng_seed: int
) -> tuple[CtVolume, LabelMap | None]:
    """crops a contiguous slab of `depth` slices at a uniformly random z-offset in [0, Z - depth]

    Args:
        vol (CtVolume): volume
        labels (LabelMap | None): labels cropped at the identical offset
        depth (int): number of slices
        rng_seed (int): seed of the offset draw

    Returns:
        tuple[CtVolume, LabelMap | None]: cropped volume and labels
    """

    assert depth <= vol.shape[0], f"crop depth ({depth}) is bigger than the number of slices ({vol.shape[0]})"
    if labels is not None:
        assert labels.shape == vol.shape, "labels and volume have different shapes"

    rng = np.random.default_rng(rng_seed)
    offset = int(rng.integers(0, get_num_crop_offsets(vol.shape[0], depth)))

    return crop_at_offset(vol, labels, offset=offset, depth=depth)


def crop_at_offset(
    vol: CtVolume, labels: LabelMap | None, offset: int, depth: int
) -> tuple[CtVolume, LabelMap | None]:
    assert 0 <= offset <= vol.shape[0] - depth, "crop slab falls outside the volume"

    window = slice(offset, offset + depth)
    vol = CtVolume(data=vol.data[window], spacing_mm=vol.spacing_mm, normalized=vol.normalized)

    if labels is not None:
        labels = LabelMap(classes=labels.classes[window], num_classes=labels.num_classes)

    return vol, labels


def split_for_inference(vol: CtVolume | OneHotMap, depth: int) -> list[CtVolume | OneHotMap]:
    """splits a volume (or one hot map) into Z / depth consecutive non-overlapping slabs"""

    num_slices = vol.shape[0]
    assert num_slices % depth == 0, f"number of slices ({num_slices}) is not divisible by depth ({depth})"

    slabs = []
    for start in range(0, num_slices, depth):
        if isinstance(vol, OneHotMap):
            slab = OneHotMap(data=vol.data[:, start : start + depth], num_classes=vol.num_classes)
        else:
            slab = CtVolume(
                data=vol.data[start : start + depth], spacing_mm=vol.spacing_mm, normalized=vol.normalized
            )

        slabs.append(slab)

    return slabs


def stack_predictions(chunks: list[OneHotMap]) -> OneHotMap:
    assert len(chunks) > 0, "nothing to stack"

    num_classes = chunks[0].num_classes
    in_plane = chunks[0].data.shape[2:]

    for chunk in chunks:
        assert chunk.num_classes == num_classes, "chunks have different channel counts"
        assert chunk.data.shape[2:] == in_plane, "chunks have different in-plane shapes"

    return OneHotMap(data=np.concatenate([chunk.data for chunk in chunks], axis=1), num_classes=num_classes)


def to_one_hot(labels: LabelMap) -> OneHotMap:
    data = np.eye(labels.num_classes, dtype=np.float32)[labels.classes]
    return OneHotMap(data=np.moveaxis(data, -1, 0), num_classes=labels.num_classes)


def argmax_labels(one_hot: OneHotMap) -> LabelMap:
    return LabelMap(classes=one_hot.data.argmax(axis=0), num_classes=one_hot.num_classes)


def volume_to_tensor(vols: CtVolume | list[CtVolume], device: torch.device | None = None) -> torch.Tensor:
    """stacks volumes into a (B, 1, Z, H, W) float32 batch"""

    if isinstance(vols, CtVolume):
        vols = [vols]

    data = np.stack([vol.data for vol in vols])[:, None]
    return torch.tensor(data, dtype=torch.float32, device=device)


def labels_to_tensor(labels: LabelMap | list[LabelMap], device: torch.device | None = None) -> torch.Tensor:
    """stacks label maps into a (B, Z, H, W) int64 batch"""

    if isinstance(labels, LabelMap):
        labels = [labels]

    return torch.tensor(np.stack([label.classes for label in labels]), dtype=torch.long, device=device)


def tensor_to_one_hot_maps(x: torch.Tensor) -> list[OneHotMap]:
    """unbinds a (B, C, Z, H, W) probability batch into OneHotMaps"""

    x = x.detach().float().cpu().numpy()
    return [OneHotMap(data=i, num_classes=i.shape[0]) for i in x]
