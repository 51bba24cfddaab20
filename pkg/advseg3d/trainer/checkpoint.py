# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import os
import shutil
import tempfile

import torch

from ..constants import CHECKPOINT_BLOB_VERSION, FORMAT_VERSION
from ..utils import dump_json, ensure_directory, load_json


_MANIFEST_FILENAME = "manifest.json"
_STATE_FILENAME = "state.pt"

CHECKPOINT_KINDS = ("segmentation", "pggan")


def save_checkpoint(
    path: str,
    kind: str,
    state: dict,
    config: dict,
    iteration: int,
    seed: int,
    metrics: dict | None = None,
    **extra_manifest,
) -> str:
    """writes a checkpoint directory holding a torch blob and its JSON manifest

    Both files are written into a staging directory next to path that then replaces path, so an interrupted
    save leaves the previous checkpoint intact.

    Args:
        path (str): checkpoint directory
        kind (str): segmentation or pggan
        state (dict): state dicts to store in the blob
        config (dict): run config as a JSON-like dict
        iteration (int): iterations completed
        seed (int): run seed
        metrics (dict | None, optional): metrics at this iteration. Defaults to None.
        extra_manifest: additional manifest keys

    Returns:
        str: checkpoint directory
    """

    assert kind in CHECKPOINT_KINDS, f"unexpected checkpoint kind ({kind})"

    path = os.path.normpath(path)
    parent, name = os.path.split(path)
    staging = tempfile.mkdtemp(prefix=f".{name}.", dir=ensure_directory(parent or "."))

    manifest = {
        "blob_version": CHECKPOINT_BLOB_VERSION,
        "config": config,
        "format_version": FORMAT_VERSION,
        "iteration": iteration,
        "kind": kind,
        "metrics": {} if metrics is None else metrics,
        "seed": seed,
        **extra_manifest,
    }

    try:
        torch.save(state, os.path.join(staging, _STATE_FILENAME))
        dump_json(manifest, os.path.join(staging, _MANIFEST_FILENAME))
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    # directories can't be replaced while non-empty, the previous checkpoint is moved aside first
    stale = None
    if os.path.exists(path):
        stale = f"{staging}.stale"
        os.replace(path, stale)

    os.replace(staging, path)

    if stale is not None:
        shutil.rmtree(stale)

    return path


def is_checkpoint(path: str) -> bool:
    return os.path.isfile(os.path.join(path, _MANIFEST_FILENAME))


def load_checkpoint_manifest(path: str) -> dict:
    manifest = load_json(os.path.join(path, _MANIFEST_FILENAME))

    format_version = manifest["format_version"]
    blob_version = manifest["blob_version"]

    assert format_version == FORMAT_VERSION, f"unsupported checkpoint version ({format_version})"
    assert blob_version == CHECKPOINT_BLOB_VERSION, f"unsupported blob version ({blob_version})"

    return manifest


def load_checkpoint(path: str, map_location: torch.device | str | None = "cpu") -> tuple[dict, dict]:
    manifest = load_checkpoint_manifest(path)
    state = torch.load(os.path.join(path, _STATE_FILENAME), map_location=map_location, weights_only=True)

    return manifest, state
