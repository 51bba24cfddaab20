# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import torch
from parameterized import parameterized

from advseg3d.losses import (
    ClassWeights,
    LossWeights,
    TrainBranch,
    adversarial_loss,
    semi_loss,
    total_s_loss,
    weighted_mce,
)

from ..test_commons import TestCommons


_SEED = 42


class TotalSLossTest(TestCommons):
    @parameterized.expand(
        [
            (TrainBranch.labeled, (10, 5, 0), 10.05),
            (TrainBranch.unlabeled, (0, 5, 3), 0.305),
            (TrainBranch.labeled, (0, 0, 0), 0),
            (TrainBranch.unlabeled, (0, 0, 0), 0),
        ]
    )
    def test_weighted_sum(self, branch: TrainBranch, components: tuple, expected: float) -> None:
        self.assertAlmostEqual(total_s_loss(*components, LossWeights(), branch), expected)

    def test_tensor_components(self) -> None:
        loss = total_s_loss(
            torch.tensor(10.0), torch.tensor(5.0), torch.tensor(0.0), LossWeights(), TrainBranch.labeled
        )
        self.assertAlmostEqual(loss.item(), 10.05, places=5)

    def test_labeled_with_semi_rejected(self) -> None:
        with self.assertRaises(AssertionError):
            total_s_loss(10, 5, 1, LossWeights(), TrainBranch.labeled)

    def test_unlabeled_with_voxel_loss_rejected(self) -> None:
        with self.assertRaises(AssertionError):
            total_s_loss(1, 5, 3, LossWeights(), TrainBranch.unlabeled)


class TotalSLossGradientTest(TestCommons):
    def setUp(self) -> None:
        torch.manual_seed(_SEED)

        self.logits = torch.randn(1, 3, 2, 2, 2, dtype=torch.float64, requires_grad=True)
        self.target = torch.randint(0, 3, (1, 2, 2, 2))
        self.class_weights = ClassWeights(weights=(1.0, 2.5, 0.5), dsc_snapshot=(0, 0, 0), counts=(1, 1, 1))
        # stands in for a frozen D-net
        self.disc_weights = torch.randn(1, 3, 1, 1, 1, dtype=torch.float64)
        self.loss_weights = LossWeights()

    def _get_confidence(self, probabilities: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid((probabilities * self.disc_weights).sum(dim=1))

    def test_labeled_gradcheck(self) -> None:
        def loss_function(logits: torch.Tensor) -> torch.Tensor:
            probabilities = torch.softmax(logits, dim=1)
            return total_s_loss(
                weighted_mce(probabilities, self.target, self.class_weights),
                adversarial_loss(self._get_confidence(probabilities)),
                0,
                self.loss_weights,
                TrainBranch.labeled,
            )

        self.assertTrue(torch.autograd.gradcheck(loss_function, (self.logits,), eps=1e-6, atol=1e-8, rtol=1e-4))

    def test_unlabeled_gradcheck(self) -> None:
        # fixed confidence keeps the trusted set constant under the finite-difference probes
        confidence = torch.rand(1, 2, 2, 2, dtype=torch.float64)

        def loss_function(logits: torch.Tensor) -> torch.Tensor:
            probabilities = torch.softmax(logits, dim=1)
            l_semi, _ = semi_loss(probabilities, confidence, self.loss_weights.t_semi)
            return total_s_loss(
                0,
                adversarial_loss(self._get_confidence(probabilities)),
                l_semi,
                self.loss_weights,
                TrainBranch.unlabeled,
            )

        self.assertTrue(torch.autograd.gradcheck(loss_function, (self.logits,), eps=1e-6, atol=1e-8, rtol=1e-4))
