# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

from .checkpoint import is_checkpoint, load_checkpoint, load_checkpoint_manifest, save_checkpoint
from .config import ExperimentSpec, TrainConfig, Variant
from .experiment import (
    ExperimentResult,
    build_table_experiments,
    build_training_state,
    evaluate_segnet,
    infer_case,
    make_cross_validation_folds,
    pretrain,
    run_cross_validation,
    run_experiment,
)
from .log import CSVLogWriter, PGGANLogRow, TrainLogRow, read_log
from .pggan import PGGANResult, PGGANTrainConfig, load_generator, synthesize, train_pggan
from .schedule import adjust_learning_rate, poly_lr
from .steps import (
    TrainingState,
    build_optimizer,
    train_step_labeled,
    train_step_unlabeled,
    update_discnet,
    update_segnet_labeled,
)
