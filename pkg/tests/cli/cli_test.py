# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import filecmp
import io
import json
import os
from contextlib import redirect_stderr, redirect_stdout

from advseg3d.cli import GenDataConfig, main
from advseg3d.constants import ROLE_LABELED, ROLE_SYNTHETIC, ROLE_TEST, ROLE_UNLABELED
from advseg3d.data import load_case, read_manifest
from advseg3d.metrics import CaseMetrics, MetricReport, OrganMetrics
from advseg3d.modules import DiscNetConfig, SegNetConfig
from advseg3d.trainer import ExperimentSpec, TrainConfig, Variant
from advseg3d.utils import dataclass_to_dict, dump_json, load_json

from ..test_commons import TestCommons


def _run(argv: list[str]) -> tuple[int, str, str]:
    stdout = io.StringIO()
    stderr = io.StringIO()

    with redirect_stdout(stdout), redirect_stderr(stderr):
        exit_code = main(argv + ["--verbosity", "0"])

    return exit_code, stdout.getvalue(), stderr.getvalue()


def _get_error(stderr: str) -> dict:
    return json.loads(stderr.strip().splitlines()[-1])


class GenDataCommandTest(TestCommons):
    def test_gen_data(self) -> None:
        with self.get_temporary_directory() as directory:
            config_path = os.path.join(directory, "gen.json")
            dump_json({"num_cases": 4, "num_test": 1, "num_unlabeled": 1}, config_path)

            out_dir = os.path.join(directory, "data")
            exit_code, _, _ = _run(["gen-data", "--config", config_path, "--out", out_dir])

            self.assertEqual(exit_code, 0)

            manifest = read_manifest(out_dir)
            self.assertEqual(manifest.get_case_ids(ROLE_LABELED), ["case_000", "case_001"])
            self.assertEqual(manifest.get_case_ids(ROLE_UNLABELED), ["case_002"])
            self.assertEqual(manifest.get_case_ids(ROLE_TEST), ["case_003"])

            self.assertIsNone(load_case(os.path.join(out_dir, "case_002")).labels)
            self.assertIsNotNone(load_case(os.path.join(out_dir, "case_003")).labels)

    def test_existing_output_needs_force(self) -> None:
        with self.get_temporary_directory() as directory:
            config_path = os.path.join(directory, "gen.json")
            dump_json({"num_cases": 1}, config_path)

            out_dir = os.path.join(directory, "data")
            self.assertEqual(_run(["gen-data", "--config", config_path, "--out", out_dir])[0], 0)

            exit_code, _, stderr = _run(["gen-data", "--config", config_path, "--out", out_dir])
            self.assertEqual(exit_code, 1)
            self.assertEqual(_get_error(stderr)["error"], "OutputExistsError")

            self.assertEqual(_run(["gen-data", "--config", config_path, "--out", out_dir, "--force"])[0], 0)

    def test_seed_override(self) -> None:
        with self.get_temporary_directory() as directory:
            config_path = os.path.join(directory, "gen.json")
            dump_json({"num_cases": 1, "seed": 1}, config_path)

            _run(["gen-data", "--config", config_path, "--out", os.path.join(directory, "a")])
            _run(["gen-data", "--config", config_path, "--out", os.path.join(directory, "b"), "--seed", "2"])

            self.assertEqual(read_manifest(os.path.join(directory, "a")).seed, 1)
            self.assertEqual(read_manifest(os.path.join(directory, "b")).seed, 2)

    def test_unknown_config_key(self) -> None:
        with self.get_temporary_directory() as directory:
            config_path = os.path.join(directory, "gen.json")
            dump_json({"num_cases": 1, "num_organs": 3}, config_path)

            exit_code, _, stderr = _run(["gen-data", "--config", config_path, "--out", os.path.join(directory, "a")])

        self.assertEqual(exit_code, 1)
        error = _get_error(stderr)
        self.assertEqual(error["error"], "ConfigError")
        self.assertIn("num_organs", error["message"])

    def test_roles(self) -> None:
        config = GenDataConfig(num_cases=5, num_test=2, num_unlabeled=1)
        self.assertEqual(
            [config.get_role(i) for i in range(5)],
            [ROLE_LABELED, ROLE_LABELED, ROLE_UNLABELED, ROLE_TEST, ROLE_TEST],
        )


class TrainAndEvaluateCommandTest(TestCommons):
    def test_train_evaluate_report(self) -> None:
        with self.get_temporary_directory() as directory:
            dataset_dir = os.path.join(directory, "data")
            self.make_phantom_dataset(dataset_dir, num_cases=4, num_test=1)

            config = TrainConfig(
                experiment=ExperimentSpec(
                    variant=Variant.res_unet_aux,
                    labeled_cases=("case_000", "case_001"),
                    validation_cases=("case_002",),
                    test_cases=("case_003",),
                    name="cli",
                ),
                dataset_dir=dataset_dir,
                max_iterations=2,
                pretrain_iterations=1,
                batch_size=1,
                segnet=SegNetConfig(base_channels=2),
                discnet=DiscNetConfig(base_channels=2),
                device="cpu",
            )
            config_path = os.path.join(directory, "train.json")
            with open(config_path, "w") as f:
                json.dump(dataclass_to_dict(config), f)

            run_dir = os.path.join(directory, "run")
            self.assertEqual(_run(["train-seg", "--config", config_path, "--out", run_dir])[0], 0)
            self.assertTrue(filecmp.cmp(config_path, os.path.join(run_dir, "config.json"), shallow=False))
            self.assertEqual(load_json(os.path.join(run_dir, "resolved_config.json")), dataclass_to_dict(config))

            evaluate_path = os.path.join(directory, "evaluate.json")
            evaluate_config = {
                "checkpoint_dir": os.path.join(run_dir, "checkpoint_last"),
                "dataset_dir": dataset_dir,
                "device": "cpu",
            }
            dump_json(evaluate_config, evaluate_path)
            evaluate_dir = os.path.join(directory, "evaluate")
            self.assertEqual(_run(["evaluate", "--config", evaluate_path, "--out", evaluate_dir])[0], 0)

            report = MetricReport.read_json(os.path.join(evaluate_dir, "report.json"))
            self.assertEqual([case.case_id for case in report.cases], ["case_003"])

            missing_dir = os.path.join(directory, "missing")
            comparison_dir = os.path.join(directory, "comparison")
            exit_code, stdout, _ = _run(["report", run_dir, missing_dir, "--out", comparison_dir])

            self.assertEqual(exit_code, 0)
            self.assertIn("run", stdout)
            self.assertIn("incomplete", stdout)

            comparison = load_json(os.path.join(comparison_dir, "comparison.json"))
            self.assertEqual([row[0] for row in comparison["rows"]], ["run", "missing"])
            self.assertTrue(os.path.isfile(os.path.join(comparison_dir, "comparison.csv")))

    def test_train_seg_needs_config(self) -> None:
        with self.get_temporary_directory() as directory:
            exit_code, _, stderr = _run(["train-seg", "--out", directory])

        self.assertEqual(exit_code, 1)
        self.assertEqual(_get_error(stderr)["error"], "ConfigError")


class ReportCommandTest(TestCommons):
    def test_report_prints_table(self) -> None:
        report = MetricReport(organ_names=("prostate",))
        report.add_case(CaseMetrics("a", {"prostate": OrganMetrics(dsc=0.8, ahd_mm=1, ashd_mm=1, vd_percent=2)}))

        with self.get_temporary_directory() as directory:
            run_dir = os.path.join(directory, "exp2")
            os.makedirs(run_dir)
            report.write_json(os.path.join(run_dir, "report.json"))

            exit_code, stdout, _ = _run(["report", run_dir])

        self.assertEqual(exit_code, 0)
        self.assertIn("exp2", stdout)
        self.assertIn("0.8000(±0.0000) *", stdout)


class SynthCommandTest(TestCommons):
    def test_train_pggan_then_synth(self) -> None:
        with self.get_temporary_directory() as directory:
            dataset_dir = os.path.join(directory, "data")
            self.make_phantom_dataset(dataset_dir, num_cases=2)

            pggan_path = os.path.join(directory, "pggan.json")
            dump_json(
                {
                    "dataset_dir": dataset_dir,
                    "iterations_per_stage": 1,
                    "batch_size": 1,
                    "model": {"latent_channels": 2, "max_channels": 2, "min_channels": 1},
                    "device": "cpu",
                },
                pggan_path,
            )
            pggan_dir = os.path.join(directory, "pggan")
            self.assertEqual(_run(["train-pggan", "--config", pggan_path, "--out", pggan_dir])[0], 0)
            self.assertTrue(filecmp.cmp(pggan_path, os.path.join(pggan_dir, "config.json"), shallow=False))
            self.assertEqual(load_json(os.path.join(pggan_dir, "resolved_config.json"))["iterations_per_stage"], 1)

            synth_path = os.path.join(directory, "synth.json")
            synth_config = {"checkpoint_dir": os.path.join(pggan_dir, "stage_3"), "num_volumes": 2, "device": "cpu"}
            dump_json(synth_config, synth_path)
            self.assertEqual(_run(["synth", "--config", synth_path, "--out", dataset_dir])[0], 0)

            manifest = read_manifest(dataset_dir)
            self.assertEqual(manifest.get_case_ids(ROLE_SYNTHETIC), ["synth_000", "synth_001"])
            self.assertEqual(len(manifest.cases), 4)

            case = load_case(os.path.join(dataset_dir, "synth_001"))
            self.assertEqual(case.volume.shape, (16, 32, 32))
            self.assertIsNone(case.labels)

            exit_code, _, stderr = _run(["synth", "--config", synth_path, "--out", dataset_dir])
            self.assertEqual(exit_code, 1)
            self.assertEqual(_get_error(stderr)["error"], "OutputExistsError")
