# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import numpy as np
from parameterized import parameterized

from advseg3d.constants import DESK_GRID_SHAPE, NUM_CLASSES
from advseg3d.data import PhantomSpec, generate_phantom, normalize_intensity
from advseg3d.errors import PhantomPlacementError

from ..test_commons import TestCommons


class PhantomTest(TestCommons):
    def test_deterministic(self) -> None:
        volume_1, labels_1 = generate_phantom(PhantomSpec(seed=7))
        volume_2, labels_2 = generate_phantom(PhantomSpec(seed=7))

        np.testing.assert_array_equal(volume_1.data, volume_2.data)
        np.testing.assert_array_equal(labels_1.classes, labels_2.classes)

    def test_seeds_differ(self) -> None:
        volume_1, _ = generate_phantom(PhantomSpec(seed=1))
        volume_2, _ = generate_phantom(PhantomSpec(seed=2))

        self.assertFalse(np.array_equal(volume_1.data, volume_2.data))

    @parameterized.expand([(seed,) for seed in range(10)])
    def test_every_organ_present(self, seed: int) -> None:
        volume, labels = generate_phantom(PhantomSpec(seed=seed))

        self.assertEqual(volume.shape, DESK_GRID_SHAPE)
        self.assertFalse(volume.normalized)
        self.assertTrue((labels.get_counts()[1:] > 0).all())
        self.assertEqual(labels.num_classes, NUM_CLASSES)

    def test_noiseless_intensities_follow_labels(self) -> None:
        spec = PhantomSpec(seed=3, noise_sigma=0, class_mean_jitter=0)
        volume, labels = generate_phantom(spec)

        expected = np.asarray(spec.class_means, dtype=np.float32)[labels.classes]
        np.testing.assert_array_equal(volume.data, expected)

    def test_normalized_phantom_in_unit_range(self) -> None:
        volume, _ = generate_phantom(PhantomSpec(seed=4))
        volume = normalize_intensity(volume)

        self.assertGreaterEqual(volume.data.min(), 0)
        self.assertLessEqual(volume.data.max(), 1)

    def test_collision_raises(self) -> None:
        with self.assertRaises(PhantomPlacementError) as context:
            generate_phantom(PhantomSpec(seed=5, radius_scale_range=(3.0, 3.0), max_retries=2))

        self.assertEqual(context.exception.seed, 5)

    def test_tiny_grid_rejected(self) -> None:
        with self.assertRaises(AssertionError):
            PhantomSpec(seed=0, grid_shape=(4, 32, 32))
