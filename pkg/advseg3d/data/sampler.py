# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import numpy as np
import torch

from .transforms import labels_to_tensor, random_crop_subvolume, volume_to_tensor
from .volume import CtVolume, LabelMap


class CropSampler:
    """draws batches of random depth-slabs from a fixed case list, all randomness comes from `seed`"""

    def __init__(
        self, cases: list[tuple[CtVolume, LabelMap | None]], depth: int, batch_size: int, seed: int
    ) -> None:
        assert len(cases) > 0, "no cases to sample from"
        assert batch_size >= 1, "batch_size should be >= 1"

        self.cases = cases
        self.depth = depth
        self.batch_size = batch_size
        self.rng = np.random.default_rng(seed)

    def sample(self, device: torch.device | None = None) -> tuple[torch.Tensor, torch.Tensor | None]:
        volumes = []
        labels = []

        for index in self.rng.integers(0, len(self.cases), size=self.batch_size):
            volume, label = self.cases[index]
            volume, label = random_crop_subvolume(
                volume, label, depth=self.depth, rng_seed=int(self.rng.integers(0, 2**31))
            )

            volumes.append(volume)
            labels.append(label)

        volumes = volume_to_tensor(volumes, device=device)
        labels = None if any(label is None for label in labels) else labels_to_tensor(labels, device=device)

        return volumes, labels

    def state_dict(self) -> dict:
        return self.rng.bit_generator.state

    def load_state_dict(self, state: dict) -> None:
        self.rng.bit_generator.state = state
