# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import json
import os
from dataclasses import dataclass, replace

import numpy as np
import torch
from tqdm import tqdm

from ..backend import MetricBackend
from ..constants import CLASS_NAMES
from ..data import (
    CaseDataset,
    CropSampler,
    CtVolume,
    LabelMap,
    argmax_labels,
    load_dataset,
    split_for_inference,
    stack_predictions,
    tensor_to_one_hot_maps,
    volume_to_tensor,
)
from ..losses import ClassWeightTracker
from ..metrics import MetricReport, evaluate_cases
from ..modules import SegNet, build_discnet, build_segnet
from ..utils import (
    dataclass_to_dict,
    derive_seed,
    dump_json,
    ensure_directory,
    get_device,
    get_logger,
    is_progress_enabled,
    set_seed,
)
from .checkpoint import is_checkpoint, load_checkpoint, save_checkpoint
from .config import ExperimentSpec, TrainConfig, Variant
from .log import CSVLogWriter, TrainLogRow
from .steps import TrainingState, build_optimizer, train_step_labeled, train_step_unlabeled


logger = get_logger(__name__)

BEST_CHECKPOINT = "checkpoint_best"
LAST_CHECKPOINT = "checkpoint_last"
TRAIN_LOG = "train_log.csv"
CONFIG_FILENAME = "config.json"
RESOLVED_CONFIG_FILENAME = "resolved_config.json"
REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"
SUMMARY_FILENAME = "summary.json"


@dataclass
class ExperimentResult:
    run_dir: str
    report: MetricReport
    log_path: str
    last_checkpoint: str
    best_checkpoint: str | None = None
    best_dsc: float | None = None


def build_training_state(config: TrainConfig, device: torch.device | None = None) -> TrainingState:
    segnet = build_segnet(config.get_segnet_config(), seed=derive_seed(config.seed, "segnet")).to(device)

    discnet = None
    d_optimizer = None
    if config.experiment.variant.use_adversarial:
        discnet = build_discnet(config.discnet, seed=derive_seed(config.seed, "discnet")).to(device)
        d_optimizer = build_optimizer(discnet, config.d_lr, config.adam_betas)

    return TrainingState(
        segnet=segnet,
        s_optimizer=build_optimizer(segnet, config.s_lr, config.adam_betas),
        tracker=ClassWeightTracker(config.segnet.num_classes),
        discnet=discnet,
        d_optimizer=d_optimizer,
    )


def pretrain(
    state: TrainingState,
    sampler: CropSampler,
    config: TrainConfig,
    log_writer: CSVLogWriter | None = None,
    device: torch.device | None = None,
) -> list[TrainLogRow]:
    """labeled-only steps until config.pretrain_iterations is reached"""

    rows = []
    while state.iteration < config.pretrain_iterations:
        volumes, labels = sampler.sample(device)
        assert labels is not None, "pretraining needs labeled cases"

        row = train_step_labeled(state, volumes, labels, config)
        rows.append(row)
        if log_writer is not None:
            log_writer.write(row)

    return rows


@torch.no_grad()
def infer_case(segnet: SegNet, volume: CtVolume, depth: int, device: torch.device | None = None) -> LabelMap:
    """splits the volume into depth-slabs, runs S-net on each and stacks the fused predictions before the argmax

    Args:
        segnet (SegNet): segmentation network
        volume (CtVolume): normalized volume whose depth is divisible by depth
        depth (int): slab depth, equal to the S-net input depth
        device (torch.device | None, optional): device to run on. Defaults to None.

    Returns:
        LabelMap: labels of the whole volume
    """

    assert volume.normalized, "inference expects a normalized volume"

    segnet.eval()

    chunks = []
    for slab in split_for_inference(volume, depth):
        output = segnet(volume_to_tensor(slab, device=device))
        chunks.extend(tensor_to_one_hot_maps(output.fused))

    return argmax_labels(stack_predictions(chunks))


def evaluate_segnet(
    segnet: SegNet,
    dataset: CaseDataset,
    case_ids: tuple[str, ...],
    depth: int,
    device: torch.device | None = None,
    class_names: tuple[str, ...] = CLASS_NAMES,
    backend: MetricBackend = MetricBackend.edt,
    num_workers: int = 1,
) -> MetricReport:
    triples = []
    spacing_mm = None

    for case in dataset.get_cases(list(case_ids)):
        assert case.labels is not None, f"case ({case.case_id}) has no labels to evaluate against"
        assert spacing_mm in [None, case.volume.spacing_mm], "evaluated cases should share the voxel spacing"

        spacing_mm = case.volume.spacing_mm
        triples.append((case.case_id, case.labels, infer_case(segnet, case.volume, depth, device)))

    return evaluate_cases(
        triples, spacing_mm=spacing_mm, class_names=class_names, backend=backend, num_workers=num_workers
    )


def _get_training_state_dict(state: TrainingState, samplers: dict[str, CropSampler | None], coin, best) -> dict:
    result = {
        "segnet": state.segnet.state_dict(),
        "s_optimizer": state.s_optimizer.state_dict(),
        "tracker": state.tracker.state_dict(),
        "iteration": state.iteration,
        # RNG states hold 128-bit integers and are stored as JSON text
        "rng": json.dumps(
            {
                "samplers": {name: None if s is None else s.state_dict() for name, s in samplers.items()},
                "coin": coin.bit_generator.state,
                "best": best,
            }
        ),
    }

    if state.use_adversarial:
        result["discnet"] = state.discnet.state_dict()
        result["d_optimizer"] = state.d_optimizer.state_dict()

    return result


def _load_training_state_dict(
    state: TrainingState, state_dict: dict, samplers: dict[str, CropSampler | None], coin
) -> dict:
    state.segnet.load_state_dict(state_dict["segnet"])
    state.s_optimizer.load_state_dict(state_dict["s_optimizer"])
    state.tracker.load_state_dict(state_dict["tracker"])
    state.iteration = state_dict["iteration"]

    if state.use_adversarial:
        state.discnet.load_state_dict(state_dict["discnet"])
        state.d_optimizer.load_state_dict(state_dict["d_optimizer"])

    rng = json.loads(state_dict["rng"])
    for name, sampler in samplers.items():
        if sampler is not None:
            sampler.load_state_dict(rng["samplers"][name])
    coin.bit_generator.state = rng["coin"]

    return rng["best"]


def run_experiment(config: TrainConfig, run_dir: str, resume: bool = False) -> ExperimentResult:
    """pretrains on labeled data, then interleaves labeled and unlabeled batches up to max_iterations

    After pretraining the semi-supervised variant picks the labeled branch with probability proportional to the
    labeled set size through a seeded coin. S-net is validated every config.get_validation_interval() iterations
    and the best mean non-background DSC is kept as the best checkpoint. The final report evaluates the best (or
    last) model on the test cases, or on the validation cases when there are none.

    Args:
        config (TrainConfig): run config
        run_dir (str): run directory receiving the config copy, the log, checkpoints and the report
        resume (bool, optional): continue from the last checkpoint in run_dir. Defaults to False.

    Returns:
        ExperimentResult: report and artifact paths
    """

    assert config.dataset_dir is not None, "dataset_dir is not set"
    experiment = config.experiment
    assert len(experiment.labeled_cases) > 0, "an experiment needs labeled cases"

    set_seed(config.seed)
    device = get_device(config.device)

    ensure_directory(run_dir)
    dump_json(dataclass_to_dict(config), os.path.join(run_dir, RESOLVED_CONFIG_FILENAME))

    dataset = load_dataset(config.dataset_dir)
    class_names = dataset.manifest.class_names
    assert len(class_names) == config.segnet.num_classes, "dataset classes don't match the S-net classes"

    labeled = [(case.volume, case.labels) for case in dataset.get_cases(list(experiment.labeled_cases))]
    assert all(labels is not None for _, labels in labeled), "labeled cases should have labels"

    samplers = {
        "labeled": CropSampler(
            labeled, config.crop_depth, config.batch_size, derive_seed(config.seed, "sampler", "labeled")
        ),
        "unlabeled": None,
    }
    if experiment.variant.use_semi:
        # labels of cases used as unlabeled data are never read
        unlabeled = [(case.volume, None) for case in dataset.get_cases(list(experiment.unlabeled_cases))]
        samplers["unlabeled"] = CropSampler(
            unlabeled, config.crop_depth, config.batch_size, derive_seed(config.seed, "sampler", "unlabeled")
        )

    coin = np.random.default_rng(derive_seed(config.seed, "interleave"))
    labeled_probability = len(experiment.labeled_cases) / (
        len(experiment.labeled_cases) + len(experiment.unlabeled_cases)
    )

    state = build_training_state(config, device)
    best = {"dsc": None, "iteration": None}

    last_checkpoint = os.path.join(run_dir, LAST_CHECKPOINT)
    best_checkpoint = os.path.join(run_dir, BEST_CHECKPOINT)

    resume_iteration = None
    if resume and is_checkpoint(last_checkpoint):
        _, state_dict = load_checkpoint(last_checkpoint, map_location=device)
        best = _load_training_state_dict(state, state_dict, samplers, coin)
        state.last_checkpoint = last_checkpoint
        resume_iteration = state.iteration
        logger.info("resuming %s from iteration %d", run_dir, state.iteration)

    log_path = os.path.join(run_dir, TRAIN_LOG)
    log_writer = CSVLogWriter(log_path, TrainLogRow, resume_iteration=resume_iteration)
    config_dict = dataclass_to_dict(config)

    def _save(path: str, metrics: dict) -> None:
        save_checkpoint(
            path,
            kind="segmentation",
            state=_get_training_state_dict(state, samplers, coin, best),
            config=config_dict,
            iteration=state.iteration,
            seed=config.seed,
            metrics=metrics,
        )

    validation_interval = config.get_validation_interval()

    progress_bar = tqdm(
        total=config.max_iterations, initial=state.iteration, disable=not is_progress_enabled(), desc=experiment.name
    )

    while state.iteration < config.max_iterations:
        use_labeled = (
            state.iteration < config.pretrain_iterations
            or not experiment.variant.use_semi
            or coin.random() < labeled_probability
        )

        if use_labeled:
            volumes, labels = samplers["labeled"].sample(device)
            row = train_step_labeled(state, volumes, labels, config)
        else:
            volumes, _ = samplers["unlabeled"].sample(device)
            row = train_step_unlabeled(state, volumes, config)

        log_writer.write(row)
        logger.debug("%s", row)
        progress_bar.update(1)

        if state.iteration % validation_interval == 0 or state.iteration == config.max_iterations:
            metrics = {}

            if len(experiment.validation_cases) > 0:
                report = evaluate_segnet(
                    state.segnet, dataset, experiment.validation_cases, config.crop_depth, device, class_names
                )
                metrics["validation_dsc"] = report.get_mean_dsc()
                logger.info("iteration %d: validation DSC %.4f", state.iteration, metrics["validation_dsc"])

                if best["dsc"] is None or metrics["validation_dsc"] > best["dsc"]:
                    best = {"dsc": metrics["validation_dsc"], "iteration": state.iteration}
                    _save(best_checkpoint, metrics)

            _save(last_checkpoint, metrics)
            state.last_checkpoint = last_checkpoint

    progress_bar.close()

    if not is_checkpoint(last_checkpoint):
        _save(last_checkpoint, {})

    if best["iteration"] is not None:
        _, state_dict = load_checkpoint(best_checkpoint, map_location=device)
        state.segnet.load_state_dict(state_dict["segnet"])

    evaluation_cases = experiment.test_cases if len(experiment.test_cases) > 0 else experiment.validation_cases
    report = MetricReport(organ_names=tuple(class_names[1:]))
    if len(evaluation_cases) > 0:
        report = evaluate_segnet(state.segnet, dataset, evaluation_cases, config.crop_depth, device, class_names)

    report.write_json(os.path.join(run_dir, REPORT_JSON))
    report.write_csv(os.path.join(run_dir, REPORT_CSV))
    dump_json(
        {
            "name": experiment.name,
            "variant": experiment.variant.value,
            "iterations": state.iteration,
            "best_iteration": best["iteration"],
            "best_validation_dsc": best["dsc"],
            "evaluated_cases": list(evaluation_cases),
            "mean_dsc": report.get_mean_dsc() if len(report.cases) > 0 else None,
        },
        os.path.join(run_dir, SUMMARY_FILENAME),
    )

    return ExperimentResult(
        run_dir=run_dir,
        report=report,
        log_path=log_path,
        last_checkpoint=last_checkpoint,
        best_checkpoint=None if best["iteration"] is None else best_checkpoint,
        best_dsc=best["dsc"],
    )


def build_table_experiments(
    labeled_cases: list[str],
    synthetic_cases: list[str] = (),
    validation_cases: list[str] = (),
    test_cases: list[str] = (),
    seed: int = 42,
) -> dict[str, ExperimentSpec]:
    """the five comparison experiments: three supervised ablations on every labeled case, semi-supervised with a
    third of the labeled cases used without labels, and semi-supervised with all labeled plus synthetic cases

    Args:
        labeled_cases (list[str]): labeled case IDs
        synthetic_cases (list[str], optional): synthesized unlabeled case IDs, exp5 is skipped without any.
            Defaults to ().
        validation_cases (list[str], optional): validation case IDs. Defaults to ().
        test_cases (list[str], optional): held-out test case IDs. Defaults to ().
        seed (int, optional): seed of the exp4 labeled / unlabeled split. Defaults to 42.

    Returns:
        dict[str, ExperimentSpec]: experiments keyed exp1 to exp5
    """

    labeled_cases = tuple(labeled_cases)
    assert len(labeled_cases) >= 3, "need at least 3 labeled cases to hold out a third"

    common = {"validation_cases": tuple(validation_cases), "test_cases": tuple(test_cases)}

    permutation = np.random.default_rng(derive_seed(seed, "exp4_split")).permutation(len(labeled_cases))
    num_kept = round(2 * len(labeled_cases) / 3)
    kept = tuple(sorted(labeled_cases[i] for i in permutation[:num_kept]))
    dropped = tuple(sorted(labeled_cases[i] for i in permutation[num_kept:]))

    experiments = {
        "exp1": ExperimentSpec(variant=Variant.res_unet, labeled_cases=labeled_cases, name="exp1", **common),
        "exp2": ExperimentSpec(variant=Variant.res_unet_aux, labeled_cases=labeled_cases, name="exp2", **common),
        "exp3": ExperimentSpec(variant=Variant.res_unet_aux_adv, labeled_cases=labeled_cases, name="exp3", **common),
        "exp4": ExperimentSpec(
            variant=Variant.res_unet_aux_adv_semi,
            labeled_cases=kept,
            unlabeled_cases=dropped,
            name="exp4",
            **common,
        ),
    }

    if len(synthetic_cases) > 0:
        experiments["exp5"] = ExperimentSpec(
            variant=Variant.res_unet_aux_adv_semi,
            labeled_cases=labeled_cases,
            unlabeled_cases=tuple(synthetic_cases),
            name="exp5",
            **common,
        )

    return experiments


def make_cross_validation_folds(
    case_ids: list[str], num_folds: int = 10, seed: int = 42
) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """shuffles the cases once and returns (training, validation) pairs, every case is validated exactly once"""

    assert 2 <= num_folds <= len(case_ids), "num_folds should be in [2, number of cases]"

    permutation = np.random.default_rng(derive_seed(seed, "folds")).permutation(len(case_ids))
    folds = [tuple(sorted(case_ids[i] for i in fold)) for fold in np.array_split(permutation, num_folds)]

    return [
        (tuple(sorted(i for j, fold in enumerate(folds) if j != k for i in fold)), folds[k]) for k in range(num_folds)
    ]


def run_cross_validation(config: TrainConfig, run_dir: str, num_folds: int = 10) -> tuple[MetricReport, list]:
    """k-fold cross-validation over the labeled cases, each fold is validated (and reported) on its held-out part

    Returns:
        tuple[MetricReport, list]: report over every held-out case and the per-fold ExperimentResults
    """

    experiment = config.experiment
    folds = make_cross_validation_folds(list(experiment.labeled_cases), num_folds, config.seed)

    results = []
    report = None
    for k, (training, validation) in enumerate(folds):
        fold_config = replace(
            config,
            experiment=replace(
                experiment,
                labeled_cases=training,
                validation_cases=validation,
                test_cases=(),
                name=f"{experiment.name}_fold{k}" if experiment.name else f"fold{k}",
            ),
        )

        logger.info("cross-validation fold %d / %d", k + 1, num_folds)
        result = run_experiment(fold_config, os.path.join(run_dir, f"fold_{k}"))
        results.append(result)

        if report is None:
            report = MetricReport(organ_names=result.report.organ_names)
        for case in result.report.cases:
            report.add_case(case)

    report.write_json(os.path.join(run_dir, REPORT_JSON))
    report.write_csv(os.path.join(run_dir, REPORT_CSV))

    return report, results
