# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import os
import tempfile

import numpy as np
from tabulate import tabulate

from advseg3d.cli import GenDataConfig, gen_data
from advseg3d.constants import ROLE_LABELED, ROLE_TEST, ROLE_UNLABELED
from advseg3d.trainer import ExperimentSpec, TrainConfig, Variant, run_experiment
from advseg3d.utils import configure_logging


num_labeled = 10
num_unlabeled = 10
num_test = 5
max_iterations = 2000
pretrain_iterations = 200
batch_size = 2
seeds = [0, 1, 2]
margin = 0.02

configure_logging(1)

table = []
results = {"baseline": [], "semi": []}

with tempfile.TemporaryDirectory() as root:
    for seed in seeds:
        dataset_dir = os.path.join(root, f"data_{seed}")
        manifest = gen_data(
            GenDataConfig(
                num_cases=num_labeled + num_unlabeled + num_test,
                num_test=num_test,
                num_unlabeled=num_unlabeled,
                seed=seed,
            ),
            dataset_dir,
        )

        common = {
            "labeled_cases": tuple(manifest.get_case_ids(ROLE_LABELED)),
            "test_cases": tuple(manifest.get_case_ids(ROLE_TEST)),
        }
        experiments = {
            "baseline": ExperimentSpec(variant=Variant.res_unet_aux_adv, name=f"baseline_{seed}", **common),
            "semi": ExperimentSpec(
                variant=Variant.res_unet_aux_adv_semi,
                unlabeled_cases=tuple(manifest.get_case_ids(ROLE_UNLABELED)),
                name=f"semi_{seed}",
                **common,
            ),
        }

        row = [seed]
        for name, experiment in experiments.items():
            config = TrainConfig(
                experiment=experiment,
                dataset_dir=dataset_dir,
                max_iterations=max_iterations,
                pretrain_iterations=pretrain_iterations,
                batch_size=batch_size,
                seed=seed,
            )
            dsc = run_experiment(config, os.path.join(root, experiment.name)).report.get_mean_dsc()

            results[name].append(dsc)
            row.append(dsc)

        table.append(row)

median_baseline = float(np.median(results["baseline"]))
median_semi = float(np.median(results["semi"]))

print(tabulate(table, headers=["seed", f"{num_labeled} labeled", f"+ {num_unlabeled} unlabeled"], floatfmt=".4f"))
print()
print(
    tabulate(
        [
            [
                "semi-supervised median DSC",
                f"{median_semi:.4f}",
                f">= {median_baseline - margin:.4f}",
                median_semi >= median_baseline - margin,
            ]
        ],
        headers=["check", "value", "target", "passed"],
    )
)
