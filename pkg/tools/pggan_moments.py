# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import tempfile

import numpy as np
from tabulate import tabulate

from advseg3d.cli import GenDataConfig, gen_data
from advseg3d.data import load_dataset
from advseg3d.trainer import PGGANTrainConfig, synthesize, train_pggan
from advseg3d.utils import configure_logging


num_cases = 20
num_synthetic = 30
iterations_per_stage = 2000
tolerance = 0.15
seed = 42

configure_logging(1)

with tempfile.TemporaryDirectory() as dataset_dir:
    gen_data(GenDataConfig(num_cases=num_cases, seed=seed), dataset_dir)
    dataset = load_dataset(dataset_dir)
    real = [case.volume.data for case in dataset.get_cases(dataset.get_case_ids())]
    result = train_pggan(
        [case.volume for case in dataset.get_cases(dataset.get_case_ids())],
        PGGANTrainConfig(iterations_per_stage=iterations_per_stage, seed=seed),
    )

synthesized = [volume.data for volume in synthesize(result.generator, num_synthetic, seed)]

real_mean = np.mean(real, axis=0)
synthesized_mean = np.mean(synthesized, axis=0)
difference = np.abs(real_mean - synthesized_mean)

table = []
for name, volumes, mean in [("real", real, real_mean), ("synthesized", synthesized, synthesized_mean)]:
    table.append([name, len(volumes), mean.mean(), np.mean([volume.std() for volume in volumes])])

print(tabulate(table, headers=["volumes", "count", "mean intensity", "mean std"], floatfmt=".4f"))
print(f"per-voxel mean difference: max {difference.max():.4f}, mean {difference.mean():.4f}")
print(f"voxels within {tolerance}: {(difference <= tolerance).mean() * 100:.2f}%")
