# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch
from parameterized import parameterized

from advseg3d.modules import (
    FadeState,
    GrowthSchedule,
    PGGANConfig,
    build_pggan,
    downsample_volume,
    fade_blend,
    get_fade_state,
    grow,
    sample_noise,
    upsample_volume,
)
from advseg3d.utils import get_parameter_checksums

from ..test_commons import TestCommons


_SEED = 42
_TINY_CONFIG = PGGANConfig(latent_channels=4, max_channels=8, min_channels=2)


class GrowthScheduleTest(TestCommons):
    @parameterized.expand(
        [
            ((16, 32, 32), [(4, 4, 4), (8, 8, 8), (16, 16, 16), (16, 32, 32)]),
            ((16, 16, 16), [(4, 4, 4), (8, 8, 8), (16, 16, 16)]),
            (
                (64, 128, 128),
                [(4, 4, 4), (8, 8, 8), (16, 16, 16), (32, 32, 32), (64, 64, 64), (64, 128, 128)],
            ),
            ((4, 4, 4), [(4, 4, 4)]),
        ]
    )
    def test_from_final_shape(self, final_shape: tuple[int, int, int], expected: list) -> None:
        schedule = GrowthSchedule.from_final_shape(final_shape, iterations_per_stage=100)

        self.assertEqual(list(schedule.stages), expected)
        self.assertEqual(schedule.final_shape, final_shape)
        self.assertEqual(schedule.fade_iterations, 50)
        self.assertEqual(schedule.total_iterations, 100 * len(expected))

    @parameterized.expand(
        [
            (((4, 4, 4), (8, 8, 4)),),
            (((4, 4, 4), (4, 8, 8), (8, 16, 16)),),
            (((8, 8, 8), (16, 16, 16)),),
        ]
    )
    def test_invalid_stages_rejected(self, stages: tuple) -> None:
        with self.assertRaises(AssertionError):
            GrowthSchedule(stages=stages, iterations_per_stage=10, fade_iterations=5)

    def test_fade_longer_than_stage_rejected(self) -> None:
        with self.assertRaises(AssertionError):
            GrowthSchedule(stages=((4, 4, 4),), iterations_per_stage=10, fade_iterations=11)


class FadeTest(TestCommons):
    @parameterized.expand(
        [
            (0, 0, 100, 1.0),
            (1, 0, 100, 0.0),
            (1, 25, 100, 0.25),
            (2, 100, 100, 1.0),
            (2, 150, 100, 1.0),
            (1, 0, 0, 1.0),
        ]
    )
    def test_get_fade_state(self, stage_index: int, iteration: int, fade_iterations: int, alpha: float) -> None:
        fade = get_fade_state(stage_index, iteration, fade_iterations)

        self.assertEqual(fade.stage_index, stage_index)
        self.assertAlmostEqual(fade.alpha, alpha)

    def test_fade_blend(self) -> None:
        old = torch.rand(2, 1, 4, 4, 4)
        new = torch.rand(2, 1, 4, 4, 4)

        self.assert_equal_tensors(fade_blend(old, new, 0), old, True)
        self.assert_equal_tensors(fade_blend(old, new, 1), new, True)
        self.assert_equal_tensors(
            fade_blend(old, new, 0.5), (old + new) / 2, False, atol_float32=1e-6, rtol_float32=0
        )

        with self.assertRaises(AssertionError):
            fade_blend(old, new, 1.5)

    def test_resampling(self) -> None:
        x = torch.rand(1, 1, 4, 4, 4)

        up = upsample_volume(x, (8, 8, 8))
        self.assertEqual(tuple(up.shape), (1, 1, 8, 8, 8))
        self.assert_equal_tensors(downsample_volume(up, (4, 4, 4)), x, False, atol_float32=1e-6, rtol_float32=0)

        with self.assertRaises(AssertionError):
            downsample_volume(torch.rand(1, 1, 6, 6, 6), (4, 4, 4))


class PGGANTest(TestCommons):
    def _build(self) -> tuple:
        schedule = GrowthSchedule.from_final_shape((8, 16, 16), iterations_per_stage=4)
        return build_pggan(_TINY_CONFIG, schedule, seed=_SEED)

    def test_stage_shapes(self) -> None:
        generator, critic = self._build()
        z = sample_noise(3, _TINY_CONFIG.latent_channels, seed=_SEED)

        for stage_index, shape in enumerate(generator.stages):
            if stage_index > 0:
                generator, critic, _ = grow(generator, critic, seed=stage_index)

            fade = FadeState(alpha=1.0, stage_index=stage_index)
            volumes = generator(z, fade)

            self.assertEqual(tuple(volumes.shape), (3, 1, *shape))
            self.assertTrue(((volumes >= 0) & (volumes <= 1)).all())
            self.assertEqual(tuple(critic(volumes, fade).shape), (3,))

        self.assertTrue(generator.is_final)
        with self.assertRaises(AssertionError):
            grow(generator, critic)

    def test_grow_keeps_trained_parameters(self) -> None:
        generator, critic = self._build()

        generator_checksums = get_parameter_checksums(generator)
        critic_checksums = get_parameter_checksums(critic)

        generator, critic, fade = grow(generator, critic, seed=1)

        self.assertEqual(fade, FadeState(alpha=0.0, stage_index=1))
        grown_generator = get_parameter_checksums(generator)
        grown_critic = get_parameter_checksums(critic)

        for name, checksum in generator_checksums.items():
            self.assertEqual(grown_generator[name], checksum)
        for name, checksum in critic_checksums.items():
            self.assertEqual(grown_critic[name], checksum)

        self.assertGreater(len(grown_generator), len(generator_checksums))
        self.assertGreater(len(grown_critic), len(critic_checksums))

    def test_fresh_stage_reproduces_previous_stage(self) -> None:
        generator, critic = self._build()
        z = sample_noise(2, _TINY_CONFIG.latent_channels, seed=_SEED)

        with torch.no_grad():
            previous_volumes = generator(z, FadeState(alpha=1.0, stage_index=0))
            x = torch.rand(2, 1, *generator.stages[1])
            previous_scores = critic(downsample_volume(x, generator.stages[0]), FadeState(alpha=1.0, stage_index=0))

            generator, critic, fade = grow(generator, critic, seed=1)

            self.assert_equal_tensors(
                generator(z, fade),
                upsample_volume(previous_volumes, generator.stages[1]),
                False,
                atol_float32=1e-6,
                rtol_float32=0,
            )
            self.assert_equal_tensors(critic(x, fade), previous_scores, False, atol_float32=1e-6, rtol_float32=0)

    def test_ungrown_stage_rejected(self) -> None:
        generator, _ = self._build()

        with self.assertRaises(AssertionError):
            generator(sample_noise(1, _TINY_CONFIG.latent_channels, seed=0), FadeState(alpha=1.0, stage_index=1))

    def test_noise_deterministic(self) -> None:
        self.assert_equal_tensors(sample_noise(4, 8, seed=3), sample_noise(4, 8, seed=3), True)
        self.assertEqual(tuple(sample_noise(4, 8, seed=3).shape), (4, 8, 2, 2, 2))

    def test_stage_channels(self) -> None:
        config = PGGANConfig(max_channels=64, min_channels=8)
        self.assertEqual([config.get_stage_channels(s) for s in range(5)], [64, 32, 16, 8, 8])
