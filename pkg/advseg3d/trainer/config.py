# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from dataclasses import dataclass, field, replace
from enum import Enum

from ..constants import DEFAULT_CROP_DEPTH
from ..losses import LossWeights
from ..modules import DiscInputMode, DiscNetConfig, SegNetConfig


class Variant(Enum):
    res_unet = "res_unet"
    res_unet_aux = "res_unet_aux"
    res_unet_aux_adv = "res_unet_aux_adv"
    res_unet_aux_adv_semi = "res_unet_aux_adv_semi"

    @property
    def use_aux(self) -> bool:
        return self != Variant.res_unet

    @property
    def use_adversarial(self) -> bool:
        return self in [Variant.res_unet_aux_adv, Variant.res_unet_aux_adv_semi]

    @property
    def use_semi(self) -> bool:
        return self == Variant.res_unet_aux_adv_semi


@dataclass(frozen=True)
class ExperimentSpec:
    variant: Variant = Variant.res_unet_aux
    labeled_cases: tuple[str, ...] = ()
    # real unlabeled or synthetic cases, used only by the semi-supervised variant
    unlabeled_cases: tuple[str, ...] = ()
    validation_cases: tuple[str, ...] = ()
    test_cases: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        if self.variant.use_semi:
            assert len(self.unlabeled_cases) > 0, f"variant {self.variant.value} needs unlabeled cases"
        else:
            assert len(self.unlabeled_cases) == 0, f"variant {self.variant.value} doesn't use unlabeled cases"

        training = set(self.labeled_cases) | set(self.unlabeled_cases)
        assert len(training & set(self.validation_cases)) == 0, "validation cases overlap the training cases"
        assert len(training & set(self.test_cases)) == 0, "test cases overlap the training cases"


@dataclass(frozen=True)
class TrainConfig:
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    dataset_dir: str | None = None
    s_lr: float = 5e-4
    d_lr: float = 1e-4
    poly_power: float = 0.9
    adam_betas: tuple[float, float] = (0.9, 0.999)
    max_iterations: int = 2000
    pretrain_iterations: int = 200
    batch_size: int = 2
    crop_depth: int = DEFAULT_CROP_DEPTH
    loss_weights: LossWeights = field(default_factory=LossWeights)
    segnet: SegNetConfig = field(default_factory=SegNetConfig)
    discnet: DiscNetConfig = field(default_factory=DiscNetConfig)
    disc_input_mode: DiscInputMode = DiscInputMode.straight_through
    # None validates 20 times per run
    validation_interval: int | None = None
    seed: int = 42
    device: str | None = None

    def __post_init__(self) -> None:
        assert self.s_lr > 0 and self.d_lr > 0, "learning rates should be positive"
        assert self.poly_power > 0, "poly_power should be positive"
        assert self.max_iterations >= 0, "max_iterations should be non-negative"
        assert 0 <= self.pretrain_iterations <= self.max_iterations, "pretrain_iterations should be <= max_iterations"
        assert self.batch_size >= 1, "batch_size should be >= 1"
        assert self.crop_depth == self.segnet.in_depth, "crop_depth should match the S-net input depth"
        assert self.segnet.num_classes == self.discnet.num_classes, "S-net and D-net class counts differ"
        assert self.validation_interval is None or self.validation_interval >= 1, "validation_interval should be >= 1"

    def get_segnet_config(self) -> SegNetConfig:
        return replace(self.segnet, use_aux=self.experiment.variant.use_aux)

    def get_validation_interval(self) -> int:
        if self.validation_interval is not None:
            return self.validation_interval
        return max(1, self.max_iterations // 20)

    @staticmethod
    def full_scale(experiment: ExperimentSpec, dataset_dir: str | None = None, seed: int = 42) -> "TrainConfig":
        return TrainConfig(
            experiment=experiment,
            dataset_dir=dataset_dir,
            max_iterations=40000,
            pretrain_iterations=5000,
            segnet=SegNetConfig.full_scale(),
            discnet=DiscNetConfig.full_scale(),
            seed=seed,
        )
