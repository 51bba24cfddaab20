# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch
import torch.nn.functional as F
from parameterized import parameterized

from advseg3d.modules import MultiScalePool3d, ResidualBlock3d, SegNetConfig, build_segnet, fuse_heads
from advseg3d.utils import get_parameter_checksums

from ..test_commons import TestCommons


_SEED = 42


class SegNetTest(TestCommons):
    @parameterized.expand(TestCommons.make_args_matrix([1, 2], [True, False]))
    def test_output_shapes(self, batch_size: int, use_aux: bool) -> None:
        config = self.get_tiny_segnet_config(use_aux=use_aux)
        segnet = build_segnet(config, seed=_SEED)

        output = segnet(torch.rand(batch_size, 1, *config.input_shape))

        self.assertEqual(tuple(output.fused.shape), (batch_size, 6, 16, 32, 32))
        self.assertEqual(tuple(output.head_main.shape), (batch_size, 6, 16, 32, 32))

        if use_aux:
            self.assertEqual(tuple(output.head_aux2.shape), (batch_size, 6, 8, 16, 16))
            self.assertEqual(tuple(output.head_aux4.shape), (batch_size, 6, 4, 8, 8))
            self.assertEqual(sorted(output.logits.keys()), ["aux2", "aux4", "main"])
        else:
            self.assertIsNone(output.head_aux2)
            self.assertIsNone(output.head_aux4)
            self.assertIsNone(segnet.head_aux2)
            self.assertEqual(list(output.logits.keys()), ["main"])

    def test_fused_is_distribution(self) -> None:
        config = self.get_tiny_segnet_config()
        output = build_segnet(config, seed=_SEED)(torch.rand(2, 1, *config.input_shape))

        self.assertTrue((output.fused >= 0).all())
        self.assert_equal_tensors(
            output.fused.sum(dim=1), torch.ones(2, *config.input_shape), False, atol_float32=1e-5, rtol_float32=0
        )

    def test_no_aux_fused_is_main_head(self) -> None:
        config = self.get_tiny_segnet_config(use_aux=False)
        output = build_segnet(config, seed=_SEED)(torch.rand(1, 1, *config.input_shape))

        self.assert_equal_tensors(output.fused, output.head_main, True)

    def test_seeded_build(self) -> None:
        config = self.get_tiny_segnet_config()

        checksums = get_parameter_checksums(build_segnet(config, seed=_SEED))
        self.assertEqual(checksums, get_parameter_checksums(build_segnet(config, seed=_SEED)))
        self.assertNotEqual(checksums, get_parameter_checksums(build_segnet(config, seed=_SEED + 1)))

    def test_every_parameter_receives_gradient(self) -> None:
        config = self.get_tiny_segnet_config()
        segnet = build_segnet(config, seed=_SEED)

        output = segnet(torch.rand(1, 1, *config.input_shape))
        (output.fused * torch.rand_like(output.fused)).sum().backward()

        for name, parameter in segnet.named_parameters():
            self.assertIsNotNone(parameter.grad, name)

    def test_fused_gradcheck(self) -> None:
        config = SegNetConfig(
            in_depth=4, in_height=4, in_width=4, num_classes=2, base_channels=1, depth_levels=2, normalization="none"
        )
        segnet = build_segnet(config, seed=_SEED).double()
        x = torch.rand(1, 1, 4, 4, 4, dtype=torch.float64)

        # 4 voxels of the fused map
        parameters, function = self.get_parameter_function(segnet, lambda forward: forward(x).fused[0, :, 0, 0, :])
        self.assertTrue(torch.autograd.gradcheck(function, parameters, eps=1e-6, atol=1e-5, rtol=1e-3))

    def test_full_scale_head_features(self) -> None:
        config = SegNetConfig.full_scale()
        segnet = build_segnet(config)

        self.assertEqual(
            segnet.get_head_feature_shapes(),
            {"main": (64, 16, 128, 128), "aux2": (128, 8, 64, 64), "aux4": (256, 4, 32, 32)},
        )
        self.assertEqual(segnet.head_main.in_channels, 64)
        self.assertEqual(segnet.head_aux2.in_channels, 128)
        self.assertEqual(segnet.head_aux4.in_channels, 256)

    @parameterized.expand([((16, 30, 32),), ((12, 32, 32),)])
    def test_indivisible_input_rejected(self, shape: tuple[int, int, int]) -> None:
        with self.assertRaises(AssertionError):
            SegNetConfig(in_depth=shape[0], in_height=shape[1], in_width=shape[2])

    def test_wrong_input_shape_rejected(self) -> None:
        segnet = build_segnet(self.get_tiny_segnet_config())

        with self.assertRaises(AssertionError):
            segnet(torch.rand(1, 1, 16, 16, 16))


class ResidualBlockTest(TestCommons):
    @parameterized.expand([("instance", False), ("none", True)])
    def test_conv_bias(self, normalization: str, has_bias: bool) -> None:
        block = ResidualBlock3d(2, 4, normalization)

        self.assertEqual(block.conv1.bias is not None, has_bias)
        self.assertEqual(block.conv2.bias is not None, has_bias)
        self.assertEqual(tuple(block(torch.rand(1, 2, 4, 4, 4)).shape), (1, 4, 4, 4, 4))


class MultiScalePoolTest(TestCommons):
    def test_branches_halve(self) -> None:
        pool = MultiScalePool3d(3)

        branches = pool.pool_branches(torch.rand(2, 3, 8, 16, 16))
        self.assertEqual(len(branches), 3)
        for branch in branches:
            self.assertEqual(tuple(branch.shape), (2, 3, 4, 8, 8))

        self.assertEqual(tuple(pool(torch.rand(2, 3, 8, 16, 16)).shape), (2, 3, 4, 8, 8))

    def test_kernel_2_branch_is_max_pool(self) -> None:
        x = torch.rand(2, 3, 8, 16, 16)
        self.assert_equal_tensors(MultiScalePool3d(3).pool_branches(x)[0], F.max_pool3d(x, 2), True)

    def test_constant_input(self) -> None:
        x = torch.full((1, 3, 8, 8, 8), 0.37)

        for branch in MultiScalePool3d(3).pool_branches(x):
            self.assert_equal_tensors(branch, torch.full((1, 3, 4, 4, 4), 0.37), True)

    def test_odd_dims_rejected(self) -> None:
        with self.assertRaises(AssertionError):
            MultiScalePool3d(3)(torch.rand(1, 3, 8, 15, 16))


class FuseHeadsTest(TestCommons):
    @staticmethod
    def _constant_head(class_index: int, shape: tuple[int, int, int]) -> torch.Tensor:
        head = torch.zeros(1, 3, *shape)
        head[:, class_index] = 1
        return head

    def test_weighted_sum(self) -> None:
        main = self._constant_head(0, (4, 8, 8))
        aux2 = self._constant_head(1, (2, 4, 4))
        aux4 = self._constant_head(2, (1, 2, 2))

        fused = fuse_heads(main, aux2, aux4, weights=(1.0, 0.5, 0.25))

        self.assertEqual(tuple(fused.shape), (1, 3, 4, 8, 8))
        for class_index, expected in enumerate([1 / 1.75, 0.5 / 1.75, 0.25 / 1.75]):
            self.assert_equal_tensors(
                fused[:, class_index], torch.full((1, 4, 8, 8), expected), False, atol_float32=1e-6, rtol_float32=0
            )

    def test_single_voxel(self) -> None:
        main = torch.tensor([0.8, 0.2]).view(1, 2, 1, 1, 1)
        aux = torch.tensor([0.5, 0.5]).view(1, 2, 1, 1, 1)

        fused = fuse_heads(main, aux, aux).flatten()

        self.assertAlmostEqual(fused[0].item(), 0.6714, places=4)
        self.assertAlmostEqual(fused[1].item(), 0.3286, places=4)

    def test_identical_heads_fixed_point(self) -> None:
        p = self.get_random_probabilities((1, 3, 1, 1, 1)).expand(1, 3, 4, 8, 8).contiguous()

        fused = fuse_heads(p, p[:, :, :2, :4, :4].contiguous(), p[:, :, :1, :2, :2].contiguous())
        self.assert_equal_tensors(fused, p, False, atol_float32=1e-6, rtol_float32=1e-6)

    def test_missing_and_zero_weight_heads_skipped(self) -> None:
        main = self._constant_head(0, (4, 8, 8))
        aux2 = self._constant_head(1, (2, 4, 4))

        self.assert_equal_tensors(fuse_heads(main, None, None), main, True)
        self.assert_equal_tensors(fuse_heads(main, aux2, None, weights=(1.0, 0.0, 0.25)), main, True)

    def test_zero_total_weight_rejected(self) -> None:
        with self.assertRaises(AssertionError):
            fuse_heads(self._constant_head(0, (4, 8, 8)), None, None, weights=(0.0, 1.0, 1.0))
