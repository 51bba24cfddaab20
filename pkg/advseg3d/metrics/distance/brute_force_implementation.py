# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import numpy as np
from scipy.spatial.distance import cdist


_CHUNK_SIZE = 4096


def _get_points(mask: np.ndarray, spacing_mm: tuple[float, float, float]) -> np.ndarray:
    return np.argwhere(mask).astype(np.float64) * np.asarray(spacing_mm, dtype=np.float64)


def directed_distances_brute_force(
    source: np.ndarray, target: np.ndarray, spacing_mm: tuple[float, float, float]
) -> np.ndarray:
    target_points = _get_points(target, spacing_mm)
    source_points = _get_points(source, spacing_mm)

    distances = np.empty(source_points.shape[0], dtype=np.float64)
    for start in range(0, source_points.shape[0], _CHUNK_SIZE):
        end = start + _CHUNK_SIZE
        distances[start:end] = cdist(source_points[start:end], target_points).min(axis=1)

    return distances


def extract_surface_brute_force(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 1, constant_values=False)

    interior = padded[1:-1, 1:-1, 1:-1].copy()
    for axis in range(3):
        for shift in [-1, 1]:
            neighbour = np.roll(padded, shift, axis=axis)[1:-1, 1:-1, 1:-1]
            interior &= neighbour

    return mask & ~interior
