# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .backend import MetricBackend
from .constants import CLASS_NAMES, NUM_CLASSES, ORGAN_NAMES
from .data import CtVolume, LabelMap, OneHotMap, generate_phantom, load_dataset
from .errors import (
    ConfigError,
    EmptyMaskError,
    NonFiniteLossError,
    NonFiniteValueError,
    OutputExistsError,
    PhantomPlacementError,
)
from .losses import LossWeights
from .metrics import MetricReport, evaluate_case
from .modules import DiscNet, DiscNetConfig, SegNet, SegNetConfig, build_discnet, build_segnet
from .trainer import ExperimentSpec, TrainConfig, Variant, run_experiment
from .utils import set_seed
