# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass

import numpy as np

from ..constants import CLASS_NAMES, DEFAULT_SPACING_MM, DESK_GRID_SHAPE, NUM_CLASSES
from ..errors import PhantomPlacementError
from ..utils import get_logger
from .volume import CtVolume, LabelMap


logger = get_logger(__name__)

_MIN_GRID_SIZE = 8
_MIN_ORGAN_FRACTION = 1e-3

# organ geometry in normalized (z, h, w) coordinates of the grid
# kind: "ellipsoid" uses center + radii, "z_cylinder" is a tube along z spanning [z_start, z_end]
_ORGAN_TEMPLATES = {
    "prostate": {"kind": "ellipsoid", "center": (0.3, 0.5, 0.5), "radii": (0.12, 0.12, 0.12)},
    "bladder": {"kind": "ellipsoid", "center": (0.7, 0.45, 0.5), "radii": (0.2, 0.15, 0.18)},
    "rectum": {"kind": "z_cylinder", "center": (0.375, 0.76, 0.5), "radii": (0.07, 0.07), "z_range": (0, 0.75)},
    "femur_L": {"kind": "z_cylinder", "center": (0.5, 0.55, 0.18), "radii": (0.08, 0.08), "z_range": (0, 1)},
    "femur_R": {"kind": "z_cylinder", "center": (0.5, 0.55, 0.82), "radii": (0.08, 0.08), "z_range": (0, 1)},
}


@dataclass(frozen=True)
class PhantomSpec:
    seed: int
    grid_shape: tuple[int, int, int] = DESK_GRID_SHAPE
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM
    # max absolute shift of every organ center, normalized units
    center_jitter: float = 0.02
    radius_scale_range: tuple[float, float] = (0.9, 1.1)
    # raw intensity per class in CLASS_NAMES order: soft tissue, prostate, bladder, rectum, femurs
    class_means: tuple[float, float, float, float, float, float] = (40.0, 110.0, 300.0, 0.0, 1000.0, 1000.0)
    class_mean_jitter: float = 10.0
    noise_sigma: float = 15.0
    max_retries: int = 10

    def __post_init__(self) -> None:
        assert len(self.grid_shape) == 3, "grid_shape should have 3 components"
        assert all(
            i >= _MIN_GRID_SIZE for i in self.grid_shape
        ), f"grid_shape components should be >= {_MIN_GRID_SIZE}"
        assert len(self.class_means) == NUM_CLASSES, f"class_means should have {NUM_CLASSES} entries"
        assert 0 < self.radius_scale_range[0] <= self.radius_scale_range[1], "invalid radius_scale_range"
        assert self.center_jitter >= 0, "center_jitter should be non-negative"
        assert self.class_mean_jitter >= 0, "class_mean_jitter should be non-negative"
        assert self.noise_sigma >= 0, "noise_sigma should be non-negative"
        assert self.max_retries >= 1, "max_retries should be >= 1"


def _get_grid(grid_shape: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    axes = [(np.arange(n, dtype=np.float64) + 0.5) / n for n in grid_shape]
    return np.meshgrid(*axes, indexing="ij")


def _draw_organ_mask(
    template: dict, grid: tuple[np.ndarray, np.ndarray, np.ndarray], shift: np.ndarray, scale: float
) -> np.ndarray:
    zz, hh, ww = grid
    cz, ch, cw = np.asarray(template["center"]) + shift

    if template["kind"] == "ellipsoid":
        rz, rh, rw = np.asarray(template["radii"]) * scale
        return ((zz - cz) / rz) ** 2 + ((hh - ch) / rh) ** 2 + ((ww - cw) / rw) ** 2 <= 1

    rh, rw = np.asarray(template["radii"]) * scale
    z_start, z_end = template["z_range"]
    return (((hh - ch) / rh) ** 2 + ((ww - cw) / rw) ** 2 <= 1) & (zz >= z_start) & (zz <= z_end)


def _place_organs(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    grid = _get_grid(spec.grid_shape)
    min_voxels = max(1, int(np.ceil(_MIN_ORGAN_FRACTION * np.prod(spec.grid_shape))))
    reason = ""

    for attempt in range(spec.max_retries):
        shifts = rng.uniform(-spec.center_jitter, spec.center_jitter, size=(len(_ORGAN_TEMPLATES), 3))
        scales = rng.uniform(*spec.radius_scale_range, size=len(_ORGAN_TEMPLATES))

        labels = np.zeros(spec.grid_shape, dtype=np.int64)
        occupancy = np.zeros(spec.grid_shape, dtype=np.int64)

        for i, organ in enumerate(_ORGAN_TEMPLATES):
            mask = _draw_organ_mask(_ORGAN_TEMPLATES[organ], grid, shift=shifts[i], scale=scales[i])
            labels[mask] = CLASS_NAMES.index(organ)
            occupancy += mask

        if (occupancy > 1).any():
            reason = "organs overlap"
        elif (np.bincount(labels.reshape(-1), minlength=NUM_CLASSES)[1:] < min_voxels).any():
            reason = f"an organ covers fewer than {min_voxels} voxels"
        else:
            return labels

        logger.debug("phantom seed %d attempt %d rejected: %s", spec.seed, attempt, reason)

    raise PhantomPlacementError(seed=spec.seed, attempts=spec.max_retries, reason=reason)


def generate_phantom(spec: PhantomSpec) -> tuple[CtVolume, LabelMap]:
    """generates a raw-intensity pelvic phantom and its generating labels, a pure function of `spec`

    Femurs are two lateral bright cylinders, the bladder a bright ellipsoid, the prostate a mid-intensity
    ellipsoid below it and the rectum a low-contrast tube behind the prostate, all over noisy soft tissue.

    Args:
        spec (PhantomSpec): phantom parameters

    Raises:
        PhantomPlacementError: if no collision-free placement is found within `spec.max_retries` draws

    Returns:
        tuple[CtVolume, LabelMap]: raw volume and labels
    """

    rng = np.random.default_rng(spec.seed)
    labels = _place_organs(spec, rng)

    class_means = np.asarray(spec.class_means, dtype=np.float64)
    class_means = class_means + rng.normal(0, spec.class_mean_jitter, size=NUM_CLASSES)

    data = class_means[labels]
    if spec.noise_sigma > 0:
        data = data + rng.normal(0, spec.noise_sigma, size=spec.grid_shape)

    return CtVolume(data=data, spacing_mm=spec.spacing_mm), LabelMap(classes=labels, num_classes=NUM_CLASSES)
