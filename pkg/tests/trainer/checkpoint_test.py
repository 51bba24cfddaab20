# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import os
from unittest.mock import patch

import torch

from advseg3d.trainer import is_checkpoint, load_checkpoint, load_checkpoint_manifest, save_checkpoint

from ..test_commons import TestCommons


class CheckpointTest(TestCommons):
    def test_round_trip(self) -> None:
        module = torch.nn.Linear(3, 2)

        with self.get_temporary_directory() as directory:
            path = os.path.join(directory, "checkpoint")
            self.assertFalse(is_checkpoint(path))

            save_checkpoint(
                path,
                kind="segmentation",
                state={"segnet": module.state_dict(), "iteration": 7},
                config={"seed": 3},
                iteration=7,
                seed=3,
                metrics={"validation_dsc": 0.5},
            )

            self.assertTrue(is_checkpoint(path))
            manifest, state = load_checkpoint(path)

        self.assertEqual(manifest["kind"], "segmentation")
        self.assertEqual(manifest["iteration"], 7)
        self.assertEqual(manifest["config"], {"seed": 3})
        self.assertEqual(manifest["metrics"], {"validation_dsc": 0.5})
        self.assertEqual(state["iteration"], 7)
        self.assert_equal_tensors(state["segnet"]["weight"], module.weight.detach(), True)

    def test_extra_manifest_keys(self) -> None:
        with self.get_temporary_directory() as directory:
            save_checkpoint(directory, "pggan", {}, {}, iteration=0, seed=0, stage_index=2, alpha=0.5)
            manifest = load_checkpoint_manifest(directory)

        self.assertEqual(manifest["stage_index"], 2)
        self.assertEqual(manifest["alpha"], 0.5)
        self.assertEqual(manifest["metrics"], {})

    def test_unknown_kind_rejected(self) -> None:
        with self.get_temporary_directory() as directory:
            with self.assertRaises(AssertionError):
                save_checkpoint(directory, "optimizer", {}, {}, iteration=0, seed=0)

    def test_overwrite(self) -> None:
        with self.get_temporary_directory() as directory:
            path = os.path.join(directory, "checkpoint_last")

            save_checkpoint(path, "segmentation", {"iteration": 1}, {}, iteration=1, seed=0)
            save_checkpoint(path, "segmentation", {"iteration": 2}, {}, iteration=2, seed=0)

            manifest, state = load_checkpoint(path)
            entries = os.listdir(directory)

        self.assertEqual(manifest["iteration"], 2)
        self.assertEqual(state["iteration"], 2)
        self.assertEqual(entries, ["checkpoint_last"])

    def test_interrupted_overwrite_keeps_previous(self) -> None:
        with self.get_temporary_directory() as directory:
            path = os.path.join(directory, "checkpoint_last")
            save_checkpoint(path, "segmentation", {"iteration": 1}, {}, iteration=1, seed=0)

            with patch("torch.save", side_effect=OSError("disk full")):
                with self.assertRaises(OSError):
                    save_checkpoint(path, "segmentation", {"iteration": 2}, {}, iteration=2, seed=0)

            manifest, state = load_checkpoint(path)
            entries = os.listdir(directory)

        self.assertEqual(manifest["iteration"], 1)
        self.assertEqual(state["iteration"], 1)
        self.assertEqual(entries, ["checkpoint_last"])
