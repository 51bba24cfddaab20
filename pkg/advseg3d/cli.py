# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import argparse
import csv
import json
import os
import shutil
import sys
from dataclasses import dataclass, field, replace

from .backend import MetricBackend
from .constants import (
    CLASS_NAMES,
    DEFAULT_INTENSITY_WINDOW,
    DEFAULT_SPACING_MM,
    DESK_GRID_SHAPE,
    ROLE_LABELED,
    ROLE_SYNTHETIC,
    ROLE_TEST,
    ROLE_UNLABELED,
)
from .data import (
    CaseRecord,
    DatasetManifest,
    PhantomSpec,
    generate_phantom,
    load_dataset,
    normalize_intensity,
    read_manifest,
    save_case,
    write_manifest,
)
from .errors import ConfigError, OutputExistsError
from .metrics import MetricReport, format_comparison_table, get_comparison_rows
from .modules import build_segnet
from .trainer import (
    PGGANTrainConfig,
    TrainConfig,
    evaluate_segnet,
    load_checkpoint,
    load_generator,
    run_experiment,
    synthesize,
    train_pggan,
)
from .trainer.experiment import CONFIG_FILENAME, REPORT_CSV, REPORT_JSON, RESOLVED_CONFIG_FILENAME
from .utils import (
    configure_logging,
    dataclass_to_dict,
    derive_seed,
    dump_json,
    ensure_directory,
    get_device,
    get_logger,
    load_dataclass,
    parse_dataclass,
)


logger = get_logger(__name__)

COMMANDS = ("gen-data", "train-pggan", "synth", "train-seg", "evaluate", "report")


@dataclass(frozen=True)
class GenDataConfig:
    num_cases: int = 20
    # the last num_test cases are held out, the num_unlabeled before them are stored without labels
    num_test: int = 0
    num_unlabeled: int = 0
    grid_shape: tuple[int, int, int] = DESK_GRID_SHAPE
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM
    noise_sigma: float = 15.0
    normalization_window: tuple[float, float] = DEFAULT_INTENSITY_WINDOW
    case_prefix: str = "case"
    seed: int = 42

    def __post_init__(self) -> None:
        assert self.num_cases >= 1, "num_cases should be >= 1"
        assert self.num_test >= 0 and self.num_unlabeled >= 0, "num_test and num_unlabeled should be non-negative"
        assert self.num_test + self.num_unlabeled <= self.num_cases, "more test and unlabeled cases than cases"

    def get_role(self, index: int) -> str:
        if index >= self.num_cases - self.num_test:
            return ROLE_TEST
        if index >= self.num_cases - self.num_test - self.num_unlabeled:
            return ROLE_UNLABELED
        return ROLE_LABELED


@dataclass(frozen=True)
class SynthConfig:
    checkpoint_dir: str
    num_volumes: int = 30
    spacing_mm: tuple[float, float, float] = DEFAULT_SPACING_MM
    case_prefix: str = "synth"
    seed: int = 42
    device: str | None = None

    def __post_init__(self) -> None:
        assert self.num_volumes >= 0, "num_volumes should be non-negative"


@dataclass(frozen=True)
class EvaluateConfig:
    checkpoint_dir: str
    dataset_dir: str
    # empty evaluates the test cases of the dataset
    case_ids: tuple[str, ...] = ()
    backend: MetricBackend = MetricBackend.edt
    num_workers: int = 1
    device: str | None = None
    seed: int = 42


@dataclass
class CommandSpec:
    command: str
    config_path: str | None = None
    output_dir: str | None = None
    seed: int | None = None
    force: bool = False
    resume: bool = False
    verbosity: int = 1
    run_dirs: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        assert self.command in COMMANDS, f"unexpected command ({self.command})"


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="advseg3d", description="semi-supervised adversarial 3D segmentation")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", type=str, default=None, help="JSON config of the command")
    common.add_argument("--out", dest="output_dir", type=str, default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="overrides the seed of the config")
    common.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    common.add_argument("--resume", action="store_true", help="continue from the last checkpoint in --out")
    common.add_argument("--verbosity", type=int, default=1, help="0 = warnings, 1 = info, 2 = debug")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        subparser = subparsers.add_parser(command, parents=[common])
        if command == "report":
            subparser.add_argument("run_dirs", nargs="+", help="run directories to compare")

    return parser


def _load_config(cls: type, spec: CommandSpec, required: bool = False):
    if spec.config_path is None:
        if required:
            raise ConfigError("", f"{spec.command} needs --config")
        config = cls()
    else:
        config = load_dataclass(cls, spec.config_path)

    if spec.seed is not None:
        config = replace(config, seed=spec.seed)

    return config


def _prepare_output(spec: CommandSpec, allow_existing: bool = False) -> str:
    if spec.output_dir is None:
        raise ConfigError("", f"{spec.command} needs --out")

    if os.path.isdir(spec.output_dir) and len(os.listdir(spec.output_dir)) > 0 and not allow_existing:
        if not spec.force:
            raise OutputExistsError(f"output directory ({spec.output_dir}) isn't empty, pass --force to overwrite")
        shutil.rmtree(spec.output_dir)

    return ensure_directory(spec.output_dir)


def _copy_config(spec: CommandSpec, output_dir: str) -> None:
    # byte-for-byte, the parsed config with defaults goes to resolved_config.json
    shutil.copyfile(spec.config_path, os.path.join(output_dir, CONFIG_FILENAME))


def gen_data(config: GenDataConfig, output_dir: str) -> DatasetManifest:
    """writes config.num_cases normalized phantom cases and the dataset manifest"""

    records = []
    for index in range(config.num_cases):
        case_id = f"{config.case_prefix}_{index:03d}"
        seed = derive_seed(config.seed, "phantom", index)
        role = config.get_role(index)

        volume, labels = generate_phantom(
            PhantomSpec(
                seed=seed, grid_shape=config.grid_shape, spacing_mm=config.spacing_mm, noise_sigma=config.noise_sigma
            )
        )

        save_case(
            output_dir,
            case_id,
            normalize_intensity(volume, config.normalization_window),
            labels=None if role == ROLE_UNLABELED else labels,
            role=role,
            seed=seed,
            normalization_window=config.normalization_window,
        )
        records.append(CaseRecord(case_id=case_id, role=role, seed=seed))

    manifest = DatasetManifest(cases=tuple(records), seed=config.seed, class_names=CLASS_NAMES)
    write_manifest(output_dir, manifest)

    logger.info("wrote %d cases to %s", config.num_cases, output_dir)

    return manifest


def _run_gen_data(spec: CommandSpec) -> None:
    config = _load_config(GenDataConfig, spec)
    gen_data(config, _prepare_output(spec))


def _run_train_pggan(spec: CommandSpec) -> None:
    config = _load_config(PGGANTrainConfig, spec, required=True)
    if config.dataset_dir is None:
        raise ConfigError("dataset_dir", "train-pggan needs a dataset")

    output_dir = _prepare_output(spec)
    _copy_config(spec, output_dir)
    dump_json(dataclass_to_dict(config), os.path.join(output_dir, RESOLVED_CONFIG_FILENAME))

    dataset = load_dataset(config.dataset_dir)
    case_ids = dataset.get_case_ids(ROLE_LABELED) + dataset.get_case_ids(ROLE_UNLABELED)
    volumes = [case.volume for case in dataset.get_cases(case_ids)]

    train_pggan(volumes, config, out_dir=output_dir)


def _run_synth(spec: CommandSpec) -> None:
    config = _load_config(SynthConfig, spec, required=True)

    if spec.output_dir is None:
        raise ConfigError("", "synth needs --out")
    output_dir = ensure_directory(spec.output_dir)

    try:
        manifest = read_manifest(output_dir)
    except FileNotFoundError:
        manifest = DatasetManifest(cases=(), seed=config.seed, class_names=CLASS_NAMES)

    device = get_device(config.device)
    generator = load_generator(config.checkpoint_dir, device=device)
    volumes = synthesize(generator, config.num_volumes, config.seed, spacing_mm=config.spacing_mm, device=device)

    case_ids = [f"{config.case_prefix}_{index:03d}" for index in range(len(volumes))]
    existing = set(manifest.get_case_ids()) & set(case_ids)
    if len(existing) > 0 and not spec.force:
        raise OutputExistsError(f"cases {sorted(existing)} already exist, pass --force to overwrite")

    records = [record for record in manifest.cases if record.case_id not in existing]
    for case_id, volume in zip(case_ids, volumes):
        save_case(output_dir, case_id, volume, role=ROLE_SYNTHETIC, seed=config.seed)
        records.append(CaseRecord(case_id=case_id, role=ROLE_SYNTHETIC, seed=config.seed))

    write_manifest(output_dir, replace(manifest, cases=tuple(records)))
    logger.info("wrote %d synthetic cases to %s", len(volumes), output_dir)


def _run_train_seg(spec: CommandSpec) -> None:
    config = _load_config(TrainConfig, spec, required=True)
    output_dir = _prepare_output(spec, allow_existing=spec.resume)
    _copy_config(spec, output_dir)

    result = run_experiment(config, output_dir, resume=spec.resume)
    logger.info("finished %s, best validation DSC %s", output_dir, result.best_dsc)


def _run_evaluate(spec: CommandSpec) -> None:
    config = _load_config(EvaluateConfig, spec, required=True)
    output_dir = _prepare_output(spec)

    manifest, state = load_checkpoint(config.checkpoint_dir)
    assert manifest["kind"] == "segmentation", f"checkpoint ({config.checkpoint_dir}) is not a segmentation checkpoint"

    train_config = parse_dataclass(TrainConfig, manifest["config"])
    device = get_device(config.device)

    segnet = build_segnet(train_config.get_segnet_config()).to(device)
    segnet.load_state_dict(state["segnet"])

    dataset = load_dataset(config.dataset_dir)
    case_ids = config.case_ids if len(config.case_ids) > 0 else tuple(dataset.get_case_ids(ROLE_TEST))
    assert len(case_ids) > 0, "no cases to evaluate"

    report = evaluate_segnet(
        segnet,
        dataset,
        case_ids,
        train_config.crop_depth,
        device,
        class_names=dataset.manifest.class_names,
        backend=config.backend,
        num_workers=config.num_workers,
    )
    report.write_json(os.path.join(output_dir, REPORT_JSON))
    report.write_csv(os.path.join(output_dir, REPORT_CSV))


def _run_report(spec: CommandSpec) -> None:
    reports = {}
    for run_dir in spec.run_dirs:
        path = os.path.join(run_dir, REPORT_JSON)
        reports[os.path.basename(os.path.normpath(run_dir))] = (
            MetricReport.read_json(path) if os.path.isfile(path) else None
        )

    print(format_comparison_table(reports))

    if spec.output_dir is not None:
        output_dir = ensure_directory(spec.output_dir)
        header, rows = get_comparison_rows(reports)

        with open(os.path.join(output_dir, "comparison.csv"), "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        dump_json({"header": header, "rows": rows}, os.path.join(output_dir, "comparison.json"))


_HANDLERS = {
    "gen-data": _run_gen_data,
    "train-pggan": _run_train_pggan,
    "synth": _run_synth,
    "train-seg": _run_train_seg,
    "evaluate": _run_evaluate,
    "report": _run_report,
}


def main(argv: list[str] | None = None) -> int:
    args = get_parser().parse_args(argv)
    spec = CommandSpec(**vars(args))

    configure_logging(spec.verbosity)

    try:
        _HANDLERS[spec.command](spec)
    except Exception as e:
        logger.debug("%s failed", spec.command, exc_info=True)
        print(json.dumps({"error": e.__class__.__name__, "message": str(e)}), file=sys.stderr)
        return 1

    return 0
