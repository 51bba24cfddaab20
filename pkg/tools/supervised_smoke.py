# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import os
import tempfile

import numpy as np
from tabulate import tabulate

from advseg3d.cli import GenDataConfig, gen_data
from advseg3d.constants import ROLE_LABELED, ROLE_TEST
from advseg3d.trainer import ExperimentSpec, TrainConfig, Variant, read_log, run_experiment
from advseg3d.utils import configure_logging


num_labeled = 20
num_test = 5
max_iterations = 2000
pretrain_iterations = 200
batch_size = 2
seeds = [0, 1, 2]
dsc_threshold = 0.80

configure_logging(1)

headers = ["seed", "test DSC", "l_vox @ 1", f"l_vox @ {pretrain_iterations}"]
table = []
dsc_values = []
pretrain_drops = []

with tempfile.TemporaryDirectory() as root:
    for seed in seeds:
        dataset_dir = os.path.join(root, f"data_{seed}")
        manifest = gen_data(GenDataConfig(num_cases=num_labeled + num_test, num_test=num_test, seed=seed), dataset_dir)

        config = TrainConfig(
            experiment=ExperimentSpec(
                variant=Variant.res_unet_aux,
                labeled_cases=tuple(manifest.get_case_ids(ROLE_LABELED)),
                test_cases=tuple(manifest.get_case_ids(ROLE_TEST)),
                name=f"supervised_{seed}",
            ),
            dataset_dir=dataset_dir,
            max_iterations=max_iterations,
            pretrain_iterations=pretrain_iterations,
            batch_size=batch_size,
            seed=seed,
        )
        result = run_experiment(config, os.path.join(root, f"run_{seed}"))

        l_vox = {row.iteration: row.l_vox for row in read_log(result.log_path)}
        dsc = result.report.get_mean_dsc()

        dsc_values.append(dsc)
        pretrain_drops.append(l_vox[pretrain_iterations] < l_vox[1])
        table.append([seed, dsc, l_vox[1], l_vox[pretrain_iterations]])

median_dsc = float(np.median(dsc_values))
pretrain_passed = sum(pretrain_drops) > len(seeds) // 2

print(tabulate(table, headers=headers, floatfmt=".4f"))
print()
print(
    tabulate(
        [
            ["median test DSC", f"{median_dsc:.4f}", f">= {dsc_threshold}", median_dsc >= dsc_threshold],
            ["pretraining lowers l_vox", f"{sum(pretrain_drops)}/{len(seeds)} seeds", "majority", pretrain_passed],
        ],
        headers=["check", "value", "target", "passed"],
    )
)
