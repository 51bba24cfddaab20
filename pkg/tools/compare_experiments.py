# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import os
import tempfile
from dataclasses import replace

from advseg3d.cli import GenDataConfig, gen_data
from advseg3d.constants import ROLE_LABELED, ROLE_SYNTHETIC, ROLE_TEST
from advseg3d.data import CaseRecord, load_dataset, save_case, write_manifest
from advseg3d.metrics import format_comparison_table
from advseg3d.modules import PGGANConfig
from advseg3d.trainer import (
    PGGANTrainConfig,
    TrainConfig,
    build_table_experiments,
    run_experiment,
    synthesize,
    train_pggan,
)
from advseg3d.utils import configure_logging


num_cases = 24
num_test = 4
num_validation = 4
num_synthetic = 6
max_iterations = 400
pggan_iterations_per_stage = 200
seed = 42

configure_logging(1)

root = tempfile.mkdtemp(prefix="advseg3d_")
dataset_dir = os.path.join(root, "data")

manifest = gen_data(GenDataConfig(num_cases=num_cases, num_test=num_test, seed=seed), dataset_dir)
dataset = load_dataset(dataset_dir)

labeled = manifest.get_case_ids(ROLE_LABELED)
training, validation = labeled[:-num_validation], labeled[-num_validation:]

pggan = train_pggan(
    [case.volume for case in dataset.get_cases(training)],
    PGGANTrainConfig(
        iterations_per_stage=pggan_iterations_per_stage,
        model=PGGANConfig(latent_channels=16, max_channels=16),
        seed=seed,
    ),
)

records = list(manifest.cases)
synthetic = []
for index, volume in enumerate(synthesize(pggan.generator, num_synthetic, seed)):
    case_id = f"synth_{index:03d}"
    save_case(dataset_dir, case_id, volume, role=ROLE_SYNTHETIC, seed=seed)
    records.append(CaseRecord(case_id=case_id, role=ROLE_SYNTHETIC, seed=seed))
    synthetic.append(case_id)

write_manifest(dataset_dir, replace(manifest, cases=tuple(records)))

experiments = build_table_experiments(
    training, synthetic, validation_cases=validation, test_cases=manifest.get_case_ids(ROLE_TEST), seed=seed
)

reports = {}
for name, experiment in experiments.items():
    config = TrainConfig(
        experiment=experiment,
        dataset_dir=dataset_dir,
        max_iterations=max_iterations,
        pretrain_iterations=max_iterations // 4,
        seed=seed,
    )
    reports[name] = run_experiment(config, os.path.join(root, name)).report

print(format_comparison_table(reports))
print(f"runs written to {root}")
