# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import numpy as np
from scipy.ndimage import binary_erosion, distance_transform_edt, generate_binary_structure


_FACE_CONNECTIVITY = generate_binary_structure(3, 1)


def directed_distances_edt(
    source: np.ndarray, target: np.ndarray, spacing_mm: tuple[float, float, float]
) -> np.ndarray:
    # distance of every voxel to the nearest target voxel
    distance_map = distance_transform_edt(~target, sampling=spacing_mm)
    return distance_map[source]


def extract_surface_edt(mask: np.ndarray) -> np.ndarray:
    return mask & ~binary_erosion(mask, structure=_FACE_CONNECTIVITY, border_value=0)
