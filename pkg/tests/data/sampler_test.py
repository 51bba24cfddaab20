# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch

from advseg3d.data import CropSampler, PhantomSpec, generate_phantom, normalize_intensity

from ..test_commons import TestCommons


def _get_cases(with_labels: bool = True) -> list:
    cases = []
    for seed in range(3):
        volume, labels = generate_phantom(PhantomSpec(seed=seed))
        cases.append((normalize_intensity(volume), labels if with_labels else None))
    return cases


class CropSamplerTest(TestCommons):
    def test_batch_shapes(self) -> None:
        volumes, labels = CropSampler(_get_cases(), depth=8, batch_size=2, seed=0).sample()

        self.assertEqual(tuple(volumes.shape), (2, 1, 8, 32, 32))
        self.assertEqual(tuple(labels.shape), (2, 8, 32, 32))
        self.assertEqual(labels.dtype, torch.long)

    def test_unlabeled_batches(self) -> None:
        _, labels = CropSampler(_get_cases(with_labels=False), depth=16, batch_size=2, seed=0).sample()
        self.assertIsNone(labels)

    def test_deterministic(self) -> None:
        cases = _get_cases()
        volumes_1, _ = CropSampler(cases, depth=8, batch_size=2, seed=3).sample()
        volumes_2, _ = CropSampler(cases, depth=8, batch_size=2, seed=3).sample()

        self.assert_equal_tensors(volumes_1, volumes_2, True)

    def test_state_restore(self) -> None:
        cases = _get_cases()
        sampler = CropSampler(cases, depth=8, batch_size=2, seed=3)
        sampler.sample()

        state = sampler.state_dict()
        expected, _ = sampler.sample()

        restored = CropSampler(cases, depth=8, batch_size=2, seed=99)
        restored.load_state_dict(state)
        actual, _ = restored.sample()

        self.assert_equal_tensors(actual, expected, True)
